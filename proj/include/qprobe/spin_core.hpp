#pragma once

// Collective-spin algebra on a single Dicke manifold plus the handful of
// numerical kernels shared by the rest of the library.
//
// Basis convention: index k = 0, 1, ..., 2S carries the label m = S - k, so the
// first entry is the all-up state and the last entry the all-down state.

#include "qprobe/half_integer.hpp"
#include "qprobe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qprobe {

class CollectiveBasis {
public:
    explicit CollectiveBasis(HalfInteger spin) : spin_(spin) {
        if (spin.twice() < 0) throw std::invalid_argument("spin magnitude must be non-negative");
    }

    HalfInteger spin() const { return spin_; }
    int dim() const { return spin_.twice() + 1; }
    HalfInteger label(int index) const { return spin_ - index; }

    int index_of(HalfInteger m) const {
        const int twice_offset = spin_.twice() - m.twice();
        if (twice_offset < 0 || twice_offset > 2 * spin_.twice() || twice_offset % 2 != 0)
            throw std::out_of_range("label " + m.to_string() + " not in spin-" + spin_.to_string() +
                                    " manifold");
        return twice_offset / 2;
    }

    std::vector<HalfInteger> labels() const {
        std::vector<HalfInteger> out;
        out.reserve(dim());
        for (int k = 0; k < dim(); ++k) out.push_back(label(k));
        return out;
    }

    /// Labels as doubles (m = S, S-1, ..., -S), handy for diagonal operators.
    RealVector label_values() const {
        RealVector out(dim());
        for (int k = 0; k < dim(); ++k) out[k] = label(k).value();
        return out;
    }

private:
    HalfInteger spin_;
};

struct SpinOperators {
    HalfInteger spin;
    ComplexMatrix jx, jy, jz, jplus, jminus;
};

/// Pure state on one collective manifold.
struct StateVector {
    HalfInteger spin;
    ComplexVector amplitudes;

    int dim() const { return static_cast<int>(amplitudes.size()); }
    CollectiveBasis basis() const { return CollectiveBasis(spin); }
};

inline SpinOperators make_operators(HalfInteger spin) {
    if (spin.twice() < 1)
        throw std::invalid_argument("make_operators needs 2S >= 1, got S = " + spin.to_string());
    const CollectiveBasis basis(spin);
    const int dim = basis.dim();
    const double s = spin.value();

    SpinOperators ops{spin, {}, {}, {}, {}, {}};
    ops.jplus = ComplexMatrix::Zero(dim, dim);
    ops.jz = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
        const double m = basis.label(k).value();
        ops.jz(k, k) = m;
        // J+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>, and m+1 sits one index lower.
        if (k > 0) ops.jplus(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
    }
    ops.jminus = ops.jplus.adjoint();
    ops.jx = 0.5 * (ops.jplus + ops.jminus);
    ops.jy = complex(0.0, -0.5) * (ops.jplus - ops.jminus);
    return ops;
}

inline StateVector dicke_state(HalfInteger spin, HalfInteger m) {
    const CollectiveBasis basis(spin);
    StateVector out{spin, ComplexVector::Zero(basis.dim())};
    out.amplitudes[basis.index_of(m)] = 1.0;
    return out;
}

/// Spin coherent state with mean spin along (sin p cos a, sin p sin a, cos p).
inline StateVector coherent_state(HalfInteger spin, double polar, double azimuth) {
    const CollectiveBasis basis(spin);
    const int two_s = spin.twice();
    const double c = std::cos(0.5 * polar);
    const double s = std::sin(0.5 * polar);
    StateVector out{spin, ComplexVector(basis.dim())};
    for (int k = 0; k < basis.dim(); ++k) {
        const int ups = two_s - k;  // S + m
        const double log_binom =
            std::lgamma(two_s + 1.0) - std::lgamma(ups + 1.0) - std::lgamma(k + 1.0);
        const double magnitude = std::exp(0.5 * log_binom) * std::pow(c, ups) * std::pow(s, k);
        const double m = basis.label(k).value();
        out.amplitudes[k] = magnitude * std::exp(complex(0.0, -m * azimuth));
    }
    out.amplitudes.normalize();
    return out;
}

/// (|S> + |-S>)/sqrt(2).
inline StateVector ghz_state(HalfInteger spin) {
    const CollectiveBasis basis(spin);
    StateVector out{spin, ComplexVector::Zero(basis.dim())};
    out.amplitudes[0] += 1.0 / std::sqrt(2.0);
    out.amplitudes[basis.dim() - 1] += 1.0 / std::sqrt(2.0);
    out.amplitudes.normalize();
    return out;
}

/// exp(-iHt) psi by spectral decomposition. Works for any state type carrying
/// an `amplitudes` vector.
template <class State>
State evolve(const ComplexMatrix& h, State psi, double t) {
    if (h.rows() != psi.amplitudes.size())
        throw std::invalid_argument("Hamiltonian dimension does not match the state");
    const SpectralPropagator propagator(h);
    psi.amplitudes = propagator.apply(psi.amplitudes, t);
    return psi;
}

/// exp(-i angle J_y), a real orthogonal matrix in this basis.
inline ComplexMatrix rotation_about_y(HalfInteger spin, double angle) {
    if (spin.twice() == 0) return ComplexMatrix::Identity(1, 1);
    return SpectralPropagator(make_operators(spin).jy).unitary(angle);
}

/// Diagonal of exp(-i angle J_z).
inline ComplexVector rotation_about_z_diagonal(HalfInteger spin, double angle) {
    const RealVector m = CollectiveBasis(spin).label_values();
    ComplexVector out(m.size());
    for (Eigen::Index k = 0; k < m.size(); ++k) out[k] = std::exp(complex(0.0, -angle * m[k]));
    return out;
}

/// Matrix of the pi/2 pulse exp(-i (pi/2) J_x) in the Dicke basis.
struct MixingMatrix {
    HalfInteger spin;
    ComplexMatrix d;

    complex at(HalfInteger n, HalfInteger m) const {
        const CollectiveBasis basis(spin);
        return d(basis.index_of(n), basis.index_of(m));
    }
};

/// Built as exp(+i pi/2 J_z) exp(-i pi/2 J_y) exp(-i pi/2 J_z), i.e. through the
/// J_y eigenbasis, so that comparing against a direct exponential of J_x is a
/// genuine cross-check.
inline MixingMatrix mixing_matrix(HalfInteger spin) {
    const ComplexMatrix small_d = rotation_about_y(spin, 0.5 * pi);
    const ComplexVector z_plus = rotation_about_z_diagonal(spin, -0.5 * pi);
    const ComplexVector z_minus = rotation_about_z_diagonal(spin, 0.5 * pi);
    return MixingMatrix{spin, z_plus.asDiagonal() * small_d * z_minus.asDiagonal()};
}

struct FrequencyWeight {
    HalfInteger n;
    complex weight;
};

struct TimeSample {
    int tau;
    complex value;
};

/// Plain inverse DFT: x_k = (1/L) sum_j X_j exp(+2 pi i j k / L). Twiddles use
/// exact integer reduction of j*k mod L.
inline ComplexVector inverse_dft(const ComplexVector& spectrum) {
    const Eigen::Index len = spectrum.size();
    ComplexVector out = ComplexVector::Zero(len);
    for (Eigen::Index k = 0; k < len; ++k) {
        complex acc = 0.0;
        for (Eigen::Index j = 0; j < len; ++j) {
            const double angle = 2.0 * pi * static_cast<double>((j * k) % len) / len;
            acc += spectrum[j] * std::exp(complex(0.0, angle));
        }
        out[k] = acc / static_cast<double>(len);
    }
    return out;
}

/// Inverts a(tau) = sum_n p_n exp(-2 pi i tau n / (N+1)), n = -N/2 .. N/2,
/// from the N+1 samples tau = 0 .. N. The offset phase exp(+i pi tau N/(N+1))
/// is factored out and the rest is a standard (N+1)-point inverse transform
/// with k = n + N/2.
inline std::vector<FrequencyWeight> offset_dft_inverse(std::span<const TimeSample> samples, int n_qubits) {
    if (n_qubits < 0) throw std::invalid_argument("N must be non-negative");
    const int len = n_qubits + 1;
    if (static_cast<int>(samples.size()) != len)
        throw std::invalid_argument("expected " + std::to_string(len) + " samples, got " +
                                    std::to_string(samples.size()));
    ComplexVector ordered(len);
    std::vector<bool> seen(len, false);
    for (const auto& s : samples) {
        if (s.tau < 0 || s.tau >= len) throw std::invalid_argument("tau out of range 0..N");
        if (seen[s.tau]) throw std::invalid_argument("duplicate tau " + std::to_string(s.tau));
        seen[s.tau] = true;
        // exp(-i pi tau N/(N+1)) removes the offset; reduce tau*N mod 2(N+1).
        const long reduced = (static_cast<long>(s.tau) * n_qubits) % (2L * len);
        ordered[s.tau] = s.value * std::exp(complex(0.0, -pi * static_cast<double>(reduced) / len));
    }
    const ComplexVector weights = inverse_dft(ordered);
    std::vector<FrequencyWeight> out;
    out.reserve(len);
    for (int k = 0; k < len; ++k)
        out.push_back({HalfInteger::from_twice(2 * k - n_qubits), weights[k]});
    return out;
}

/// Q = log2(E 2^mu); Q > 0 violates the many-body Bell inequality.
/// E = 0 maps to -infinity.
inline double q_value(double e, int mu) {
    if (e < 0.0 || !std::isfinite(e)) throw std::invalid_argument("correlator must be a finite non-negative number");
    if (e == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log2(e) + mu;
}

}  // namespace qprobe
