#pragma once

// Certification quantities computed from read-out data p_n(theta): spin
// squeezing, classical Fisher information, the probe-coherence lower bound on
// the QFI, the GHZ coherence behind the Bell correlator, and an entanglement
// depth bound.

#include "qprobe/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprobe {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Sum_n p[n][j] n^alpha.
inline double moment(const ReadoutGrid& grid, int j, int alpha) {
    if (alpha != 1 && alpha != 2) throw std::invalid_argument("moment order must be 1 or 2");
    double out = 0.0;
    for (int k = 0; k <= grid.n_qubits; ++k) {
        const double n = 0.5 * grid.n_qubits - k;
        out += grid.p(k, j) * (alpha == 1 ? n : n * n);
    }
    return out;
}

enum class Derivative { spectral, central };

inline const char* to_string(Derivative d) { return d == Derivative::spectral ? "spectral" : "central"; }

/// d/dtheta on a uniform periodic grid of n points over [0, 2 pi).
/// Spectral: exact for trigonometric polynomials of degree < n/2 (every p_n(theta)
/// on a grid with n_theta >= 2N+2). Central: second-order finite differences.
class PeriodicDerivative {
public:
    PeriodicDerivative(int n_points, Derivative method) : n_(n_points), method_(method) {
        if (n_points < 3) throw std::invalid_argument("derivative needs at least 3 grid points");
        const double h = 2.0 * pi / n_points;
        if (method == Derivative::central) return;
        kernel_.assign(n_points, 0.0);
        for (int x = 1; x < n_points; ++x) {
            const double sign = x % 2 == 0 ? 1.0 : -1.0;
            kernel_[x] = n_points % 2 == 0 ? 0.5 * sign / std::tan(0.5 * x * h) : 0.5 * sign / std::sin(0.5 * x * h);
        }
    }

    int size() const { return n_; }
    Derivative method() const { return method_; }

    template <typename Vec>
    Vec apply(const Vec& f) const {
        if (f.size() != n_) throw std::invalid_argument("series length does not match derivative grid");
        Vec out(n_);
        const double h = 2.0 * pi / n_;
        for (int j = 0; j < n_; ++j) {
            if (method_ == Derivative::central) {
                out[j] = (f[(j + 1) % n_] - f[(j + n_ - 1) % n_]) / (2.0 * h);
                continue;
            }
            typename Vec::Scalar acc = 0.0;
            for (int l = 0; l < n_; ++l) acc += kernel_[((j - l) % n_ + n_) % n_] * f[l];
            out[j] = acc;
        }
        return out;
    }

private:
    int n_;
    Derivative method_;
    std::vector<double> kernel_;
};

/// Mean, variance and slope of J_z along the grid.
struct ZMoments {
    RealVector mean, variance, slope;
};

inline ZMoments z_moments(const ReadoutGrid& grid, const PeriodicDerivative& d) {
    const int nt = grid.n_theta();
    ZMoments out{RealVector(nt), RealVector(nt), RealVector()};
    for (int j = 0; j < nt; ++j) {
        out.mean[j] = moment(grid, j, 1);
        out.variance[j] = std::max(0.0, moment(grid, j, 2) - out.mean[j] * out.mean[j]);
    }
    out.slope = d.apply(out.mean);
    return out;
}

/// Below this slope magnitude the squeezing parameter is reported as +infinity.
inline constexpr double flat_slope_threshold = 1e-10;

inline double squeezing_from_moments(int n_qubits, double variance, double slope) {
    if (std::abs(slope) < flat_slope_threshold) return infinity;
    return n_qubits * variance / (slope * slope);
}

inline double spin_squeezing(const ReadoutGrid& grid, int j, Derivative method = Derivative::spectral) {
    const auto zm = z_moments(grid, PeriodicDerivative(grid.n_theta(), method));
    return squeezing_from_moments(grid.n_qubits, zm.variance[j], zm.slope[j]);
}

inline constexpr double fisher_probability_floor = 1e-12;

struct FisherSeries {
    RealVector fisher;
    std::vector<int> excluded;  ///< bins below the probability floor, per theta
};

inline FisherSeries fisher_series(const ReadoutGrid& grid, const PeriodicDerivative& d) {
    const int nt = grid.n_theta();
    RealMatrix dp(grid.n_qubits + 1, nt);
    for (int k = 0; k <= grid.n_qubits; ++k) dp.row(k) = d.apply(RealVector(grid.p.row(k).transpose())).transpose();
    FisherSeries out{RealVector::Zero(nt), std::vector<int>(nt, 0)};
    for (int j = 0; j < nt; ++j)
        for (int k = 0; k <= grid.n_qubits; ++k) {
            if (grid.p(k, j) < fisher_probability_floor) {
                ++out.excluded[j];
                continue;
            }
            out.fisher[j] += dp(k, j) * dp(k, j) / grid.p(k, j);
        }
    return out;
}

inline double fisher_information(const ReadoutGrid& grid, int j, Derivative method = Derivative::spectral) {
    return fisher_series(grid, PeriodicDerivative(grid.n_theta(), method)).fisher[j];
}

/// Probe coherence a(theta_j) at read-out time tau, from the grid columns.
inline ComplexVector a_series_from_grid(const ReadoutGrid& grid, double tau) {
    ComplexVector a(grid.n_theta());
    std::vector<double> column(grid.n_qubits + 1);
    for (int j = 0; j < grid.n_theta(); ++j) {
        for (int k = 0; k <= grid.n_qubits; ++k) column[k] = grid.p(k, j);
        a[j] = probe_coherence_symmetric(column, tau, grid.n_qubits);
    }
    return a;
}

inline double default_bound_tau(int n_qubits) { return 0.5 * (n_qubits + 1); }

/// QFI of the probe state diag(P, 1-P) with coherence a/2 as a function of theta:
///   Re(a' e^{-i phi})^2 / (1 - |a|^2) + Im(a' e^{-i phi})^2,  phi = arg a.
/// It lower-bounds the QFI of the system state. When 1 - |a|^2 < 1e-12 the
/// radial term is dropped if its numerator is below 1e-12 and is +infinity otherwise.
inline double qfi_bound_from(complex a, complex a_dot) {
    const complex rotated = a_dot * std::exp(complex(0.0, -std::arg(a)));
    const double radial = rotated.real() * rotated.real();
    const double tangential = rotated.imag() * rotated.imag();
    const double gap = 1.0 - std::norm(a);
    if (gap < 1e-12) return radial < 1e-12 ? tangential : infinity;
    return radial / gap + tangential;
}

/// QFI bounds at or below this are round-off; no Cramer-Rao number is reported.
inline constexpr double qfi_bound_resolution = 1e-12;

inline double qfi_bound(const ComplexVector& a_series, int j, Derivative method = Derivative::spectral) {
    const ComplexVector a_dot = PeriodicDerivative(static_cast<int>(a_series.size()), method).apply(a_series);
    return qfi_bound_from(a_series[j], a_dot[j]);
}

/// 4 Var(J_z) for a pure state.
inline double qfi_oracle_pure(const StateVector& psi) {
    const RealVector m = CollectiveBasis(psi.spin).label_values();
    const RealVector prob = psi.amplitudes.cwiseAbs2();
    const double mean = prob.dot(m);
    const double second = prob.dot(m.cwiseProduct(m));
    return 4.0 * (second - mean * mean);
}

/// 2 sum_{ij} (l_i - l_j)^2 / (l_i + l_j) |<i|J_z|j>|^2 over the eigenbasis of rho.
inline double qfi_oracle_mixed(const SymmetricDensityMatrix& rho) {
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho.matrix());
    const RealVector l = solver.eigenvalues();
    const ComplexMatrix& v = solver.eigenvectors();
    const RealVector m = CollectiveBasis(rho.spin()).label_values();
    const ComplexMatrix jz = v.adjoint() * m.cast<complex>().asDiagonal() * v;
    double out = 0.0;
    for (Eigen::Index i = 0; i < l.size(); ++i)
        for (Eigen::Index k = 0; k < l.size(); ++k) {
            const double s = l[i] + l[k];
            if (s < 1e-14) continue;
            out += 2.0 * (l[i] - l[k]) * (l[i] - l[k]) / s * std::norm(jz(i, k));
        }
    return out;
}

/// |rho_{N/2,-N/2}|^2 read directly from a density matrix.
inline double extreme_element(const SymmetricDensityMatrix& rho) {
    return std::norm(rho.matrix()(0, rho.n_qubits()));
}

/// (1/n) sum_j x_j exp(-i f theta_j) on the uniform grid, twiddles reduced exactly.
inline complex theta_fourier(const RealVector& x, int frequency) {
    const long n = x.size();
    complex acc = 0.0;
    for (long j = 0; j < n; ++j) {
        const long r = ((static_cast<long>(frequency) * j) % n + n) % n;
        acc += x[j] * std::exp(complex(0.0, -2.0 * pi * static_cast<double>(r) / n));
    }
    return acc / static_cast<double>(n);
}

struct SpectrumLine {
    int frequency;
    double magnitude;
};

/// Magnitudes of the normalized theta-DFT for frequencies -(n-1)/2 .. n/2.
inline std::vector<SpectrumLine> theta_spectrum(const RealVector& x) {
    const int n = static_cast<int>(x.size());
    std::vector<SpectrumLine> out;
    out.reserve(n);
    for (int f = -(n - 1) / 2; f <= n / 2; ++f) out.push_back({f, std::abs(theta_fourier(x, f))});
    return out;
}

/// The grid row with the smallest |n| (n = 0 for even N).
inline int central_row(int n_qubits) { return n_qubits / 2; }

struct BellExtraction {
    std::optional<double> e;
    std::optional<double> q;
    std::string reason;  ///< set when extraction is impossible or E is unresolved
    int rows_used = 0;
    double resolution = 0.0;  ///< smallest E distinguishable from round-off
};

inline constexpr double mixing_coefficient_floor = 1e-8;
/// Round-off level of a reconstructed Fourier line F_n.
inline constexpr double fourier_line_noise = 1e-14;

/// The frequency -N component of p_n(theta) is c_n rho_{N/2,-N/2} with
/// c_n = d[n][top] conj(d[n][bottom]); |c_n| = |d_{n,N/2}|^2. The per-row
/// estimates |F_n / c_n|^2 are averaged with weights |c_n|.
inline BellExtraction extract_bell_correlator(const ReadoutGrid& grid, const MixingMatrix& mixing) {
    const int n = grid.n_qubits;
    if (mixing.spin.twice() != n) throw std::invalid_argument("mixing matrix does not match grid size");
    if (grid.n_theta() < 2 * n + 2) throw std::invalid_argument("extraction needs n_theta >= 2N+2");
    double weighted = 0.0, weights = 0.0, inverse_weights = 0.0;
    BellExtraction out;
    for (int k = 0; k <= n; ++k) {
        const complex c = mixing.d(k, 0) * std::conj(mixing.d(k, n));
        if (std::abs(c) <= mixing_coefficient_floor) continue;
        const complex f = theta_fourier(RealVector(grid.p.row(k).transpose()), -n);
        weighted += std::abs(c) * std::norm(f / c);
        weights += std::abs(c);
        inverse_weights += 1.0 / std::abs(c);
        ++out.rows_used;
    }
    if (out.rows_used == 0) {
        out.reason = "all mixing coefficients below 1e-8";
        return out;
    }
    // Noise eps on each F_n enters |F_n / c_n|^2 as eps^2 / |c_n|^2, weighted by |c_n|.
    out.resolution = fourier_line_noise * fourier_line_noise * inverse_weights / weights;
    const double e = weighted / weights;
    if (e <= out.resolution) {
        out.reason = "E below numerical resolution";
        return out;
    }
    out.e = e;
    out.q = q_value(e, n);
    return out;
}

/// Largest k+1 with I > s k^2 + r^2, N = s k + r, 0 <= r < k; 1 when I <= N.
inline int depth_bound_from_fisher(double fisher, int n_qubits) {
    if (n_qubits < 1) throw std::invalid_argument("N must be positive");
    if (!(fisher >= -1e-9) || fisher > double(n_qubits) * n_qubits * (1.0 + 1e-6) + 1e-6)
        throw std::invalid_argument("Fisher information outside [0, N^2]");
    int depth = 1;
    for (int k = 1; k < n_qubits; ++k) {
        const int s = n_qubits / k, r = n_qubits % k;
        const double bound = double(s) * k * k + double(r) * r;
        if (fisher > bound + 1e-8 * std::max(1.0, bound)) depth = k + 1;
    }
    return depth;
}

struct CertificationReport {
    int n_qubits = 0;
    int theta_index = 0;
    double theta_star = 0.0;
    double xi2 = infinity;
    double fisher = 0.0;
    int fisher_excluded_bins = 0;
    double qfi_bound = 0.0;
    double tau = 0.0;
    std::optional<double> qfi_oracle;
    BellExtraction bell;
    int depth_bound = 1;
    bool hierarchy_ok = false;
    double cramer_rao = infinity;  ///< 1 / qfi_bound
    Derivative derivative = Derivative::spectral;
    Provenance provenance = Provenance::direct;
};

struct CertifyOptions {
    Derivative derivative = Derivative::spectral;
    std::optional<double> tau;  ///< defaults to (N+1)/2
};

/// Evaluates everything at theta* = argmin xi^2. Ties (relative 1e-9, or all
/// infinite as for states with a flat mean) go to the larger Fisher information.
inline CertificationReport certify(const ReadoutGrid& grid, std::optional<double> qfi_oracle = std::nullopt,
                                   const CertifyOptions& options = {}) {
    grid.validate();
    const int n = grid.n_qubits;
    const PeriodicDerivative d(grid.n_theta(), options.derivative);
    const auto zm = z_moments(grid, d);
    const auto fs = fisher_series(grid, d);

    CertificationReport r;
    r.n_qubits = n;
    r.derivative = options.derivative;
    r.provenance = grid.provenance;
    r.tau = options.tau.value_or(default_bound_tau(n));

    std::vector<double> xi2(grid.n_theta());
    for (int j = 0; j < grid.n_theta(); ++j) xi2[j] = squeezing_from_moments(n, zm.variance[j], zm.slope[j]);
    const double best = *std::min_element(xi2.begin(), xi2.end());
    int star = -1;
    for (int j = 0; j < grid.n_theta(); ++j) {
        const bool tied = std::isinf(best) ? std::isinf(xi2[j]) : xi2[j] <= best + 1e-9 * std::abs(best);
        if (tied && (star < 0 || fs.fisher[j] > fs.fisher[star])) star = j;
    }
    r.theta_index = star;
    r.theta_star = grid.theta[star];
    r.xi2 = xi2[star];
    r.fisher = fs.fisher[star];
    r.fisher_excluded_bins = fs.excluded[star];

    const ComplexVector a = a_series_from_grid(grid, r.tau);
    r.qfi_bound = qfi_bound_from(a[star], d.apply(a)[star]);
    r.cramer_rao = r.qfi_bound > qfi_bound_resolution ? 1.0 / r.qfi_bound : infinity;
    r.qfi_oracle = qfi_oracle;
    r.bell = extract_bell_correlator(grid, mixing_matrix(HalfInteger::from_twice(n)));
    r.depth_bound = depth_bound_from_fisher(std::min(r.fisher, double(n) * n), n);

    const double squeezing_bound = std::isinf(r.xi2) ? 0.0 : n / r.xi2;
    r.hierarchy_ok = squeezing_bound <= r.fisher + 1e-8;
    if (qfi_oracle) r.hierarchy_ok = r.hierarchy_ok && r.fisher <= *qfi_oracle + 1e-8;
    return r;
}

}  // namespace qprobe
