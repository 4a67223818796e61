#pragma once

// Single-qubit probe read-out of a collective state: phase imprint and pi/2
// mixing of the system, Ising coupling to a probe prepared along +x, and the
// Fourier inversion of the probe coherence back into p_n(theta).
//
// Probabilities p are indexed by the Dicke index k (n = N/2 - k) throughout.

#include "qprobe/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprobe {

/// Density matrix on the Dicke manifold of N qubits, validated on construction.
class SymmetricDensityMatrix {
public:
    SymmetricDensityMatrix(int n_qubits, const ComplexMatrix& rho) : n_(n_qubits) {
        if (n_qubits < 1) throw std::invalid_argument("need at least one qubit");
        if (rho.rows() != n_qubits + 1 || rho.cols() != n_qubits + 1)
            throw std::invalid_argument("density matrix must be (N+1)x(N+1)");
        if (!rho.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
        if (hermiticity_deviation(rho) > 1e-12) throw std::invalid_argument("density matrix is not Hermitian");
        if (std::abs(rho.trace() - 1.0) > 1e-12) throw std::invalid_argument("density matrix trace is not 1");
        rho_ = 0.5 * (rho + rho.adjoint());
        const Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho_, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("density matrix has a negative eigenvalue");
    }

    static SymmetricDensityMatrix pure(const StateVector& psi) {
        if (std::abs(psi.amplitudes.norm() - 1.0) > 1e-10) throw std::invalid_argument("state is not normalized");
        return SymmetricDensityMatrix(psi.spin.twice(), psi.amplitudes * psi.amplitudes.adjoint());
    }

    static SymmetricDensityMatrix maximally_mixed(int n_qubits) {
        return SymmetricDensityMatrix(n_qubits,
                                      ComplexMatrix::Identity(n_qubits + 1, n_qubits + 1) / double(n_qubits + 1));
    }

    int n_qubits() const { return n_; }
    HalfInteger spin() const { return HalfInteger::from_twice(n_); }
    const ComplexMatrix& matrix() const { return rho_; }

private:
    int n_;
    ComplexMatrix rho_;
};

/// exp(-i pi/2 J_x) exp(-i theta J_z) for a fixed N, with the mixing matrix cached.
class LocalOps {
public:
    explicit LocalOps(int n_qubits)
        : n_(n_qubits),
          mixing_(mixing_matrix(HalfInteger::from_twice(n_qubits)).d),
          labels_(CollectiveBasis(HalfInteger::from_twice(n_qubits)).label_values()) {}

    ComplexMatrix unitary(double theta) const {
        ComplexMatrix u = mixing_;
        for (int k = 0; k <= n_; ++k) u.col(k) *= std::exp(complex(0.0, -theta * labels_[k]));
        return u;
    }

    ComplexMatrix apply(const ComplexMatrix& rho, double theta) const {
        const ComplexMatrix u = unitary(theta);
        return u * rho * u.adjoint();
    }

    /// Diagonal of the rotated density matrix, clipped at zero for round-off.
    std::vector<double> probabilities(const ComplexMatrix& rho, double theta) const {
        const ComplexMatrix u = unitary(theta);
        const ComplexMatrix ur = u * rho;
        std::vector<double> p(n_ + 1);
        for (int k = 0; k <= n_; ++k) p[k] = std::max(0.0, ur.row(k).dot(u.row(k)).real());
        return p;
    }

    const ComplexMatrix& mixing() const { return mixing_; }

private:
    int n_;
    ComplexMatrix mixing_;
    RealVector labels_;
};

inline SymmetricDensityMatrix apply_local_ops(const SymmetricDensityMatrix& rho, double theta) {
    const ComplexMatrix out = LocalOps(rho.n_qubits()).apply(rho.matrix(), theta);
    return SymmetricDensityMatrix(rho.n_qubits(), 0.5 * (out + out.adjoint()));
}

/// p_n(theta) as the diagonal of the rotated density matrix.
inline std::vector<double> probability_direct(const SymmetricDensityMatrix& rho, double theta) {
    return LocalOps(rho.n_qubits()).probabilities(rho.matrix(), theta);
}

namespace detail {

inline void require_distribution(std::span<const double> p, std::size_t expected, const char* what) {
    if (p.size() != expected)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) + " weights");
    double total = 0.0;
    for (double x : p) {
        if (!std::isfinite(x) || x < -1e-10) throw std::invalid_argument(std::string(what) + ": negative weight");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument(std::string(what) + ": weights do not sum to 1");
}

}  // namespace detail

/// a(tau) = sum_n p_n exp(-2 pi i tau n/(N+1)).
inline complex probe_coherence_symmetric(std::span<const double> p, double tau, int n_qubits) {
    detail::require_distribution(p, static_cast<std::size_t>(n_qubits) + 1, "probe_coherence_symmetric");
    complex a = 0.0;
    for (int k = 0; k <= n_qubits; ++k) {
        const double n = 0.5 * n_qubits - k;
        a += p[k] * std::exp(complex(0.0, -2.0 * pi * tau * n / (n_qubits + 1)));
    }
    return a;
}

/// Dimensionless read-out time. With sigma_z eigenvalues s_i = +-1 the uniform
/// coherence is sum_n p_n exp(-4 i J t n), which has the DFT form above for
/// tau = 2 J (N+1) t / pi.
inline double tau_from_time(double j, double t, int n_qubits) { return 2.0 * j * (n_qubits + 1) * t / pi; }
inline double time_from_tau(double j, double tau, int n_qubits) { return pi * tau / (2.0 * j * (n_qubits + 1)); }

struct ProbeSample {
    double tau = 0.0;
    complex a;         ///< probe coherence divided by its t = 0 value
    double P = 0.0;    ///< probe population in |up>
};

/// Literal sum over the 2^N sigma_z configurations: a = sum_s p_s exp(-2 i t sum_i J_i s_i).
/// Bit i of the configuration index is qubit i, 0 = spin up (s = +1).
inline complex probe_coherence_general(std::span<const double> p_full, std::span<const double> couplings, double t) {
    const int n = static_cast<int>(couplings.size());
    if (n < 1 || n > 16) throw std::invalid_argument("probe_coherence_general supports 1..16 qubits");
    detail::require_distribution(p_full, std::size_t{1} << n, "probe_coherence_general");
    complex a = 0.0;
    for (std::size_t b = 0; b < p_full.size(); ++b) {
        double field = 0.0;
        for (int i = 0; i < n; ++i) field += couplings[i] * (((b >> i) & 1) ? -1.0 : 1.0);
        a += p_full[b] * std::exp(complex(0.0, -2.0 * t * field));
    }
    return a;
}

/// Evolves the diagonal of the mixed system together with a +x probe under the
/// uniform Ising coupling 2 J J_z sigma_z^(pr) and returns the normalized probe
/// coherence and population at tau.
inline ProbeSample evolve_probe_uniform(std::span<const double> p, double j, double tau, int n_qubits) {
    const double t = time_from_tau(j, tau, n_qubits);
    // Probe |+x><+x| has all entries 1/2; each Dicke sector contributes p_k times
    // the phase between probe up (energy 2Jm) and probe down (energy -2Jm).
    complex coherence = 0.0;
    double population = 0.0;
    for (int k = 0; k <= n_qubits; ++k) {
        const double m = 0.5 * n_qubits - k;
        coherence += 0.5 * p[k] * std::exp(complex(0.0, -4.0 * j * m * t));
        population += 0.5 * p[k];
    }
    return {tau, coherence / 0.5, population};
}

struct Reconstruction {
    std::vector<double> p;     ///< Dicke-index order
    double residual = 0.0;     ///< max_tau |a_tau - forward(p)|
    double max_imaginary = 0.0;
    bool physical = true;
};

enum class ReconstructionPolicy { strict, report };

/// Inverts N+1 probe samples at tau = 0..N into p_n. Negative weights in
/// [-1e-10, 0) are clamped, small sum drift is renormalized. Under the strict
/// policy anything larger is a NumericalError; under report it is flagged.
inline Reconstruction reconstruct_probabilities(std::span<const ProbeSample> samples, int n_qubits,
                                                ReconstructionPolicy policy = ReconstructionPolicy::strict) {
    std::vector<TimeSample> ts;
    ts.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.tau != std::round(s.tau)) throw std::invalid_argument("sample tau values must be the integers 0..N");
        ts.push_back({static_cast<int>(s.tau), s.a});
    }
    const auto weights = offset_dft_inverse(ts, n_qubits);

    Reconstruction out;
    out.p.assign(n_qubits + 1, 0.0);
    double most_negative = 0.0;
    for (const auto& w : weights) {
        const int k = (n_qubits - w.n.twice()) / 2;  // n = N/2 - k
        out.p[k] = w.weight.real();
        out.max_imaginary = std::max(out.max_imaginary, std::abs(w.weight.imag()));
        most_negative = std::min(most_negative, out.p[k]);
    }
    for (auto& x : out.p)
        if (x < 0.0 && x >= -1e-10) x = 0.0;
    double total = 0.0;
    for (double x : out.p) total += x;

    for (const auto& s : samples) {
        complex forward = 0.0;
        for (int k = 0; k <= n_qubits; ++k)
            forward += out.p[k] * std::exp(complex(0.0, -2.0 * pi * s.tau * (0.5 * n_qubits - k) / (n_qubits + 1)));
        out.residual = std::max(out.residual, std::abs(forward - s.a));
    }

    out.physical = most_negative >= -1e-10 && std::abs(total - 1.0) < 1e-10;
    if (!out.physical && policy == ReconstructionPolicy::strict)
        throw NumericalError("non-physical reconstruction (most negative weight " + std::to_string(most_negative) +
                             ", sum " + std::to_string(total) + ", residual " + std::to_string(out.residual) +
                             "): probe samples are inconsistent");
    if (out.physical)
        for (auto& x : out.p) x /= total;
    return out;
}

enum class Provenance { reconstructed_from_probe, direct };

inline const char* to_string(Provenance p) {
    return p == Provenance::direct ? "direct" : "reconstructed-from-probe";
}

/// p[k][j] over a uniform theta grid on [0, 2 pi).
struct ReadoutGrid {
    int n_qubits = 0;
    std::vector<double> theta;
    RealMatrix p;  ///< (N+1) x n_theta
    Provenance provenance = Provenance::direct;

    int n_theta() const { return static_cast<int>(theta.size()); }

    void validate() const {
        if (p.rows() != n_qubits + 1 || p.cols() != n_theta()) throw std::invalid_argument("grid shape mismatch");
        for (int j = 0; j < n_theta(); ++j) {
            if (std::abs(p.col(j).sum() - 1.0) > 1e-10)
                throw std::invalid_argument("grid column " + std::to_string(j) + " does not sum to 1");
            if (p.col(j).minCoeff() < -1e-10)
                throw std::invalid_argument("grid column " + std::to_string(j) + " has a negative entry");
        }
    }
};

inline int default_theta_points(int n_qubits) { return 4 * (n_qubits + 1); }

inline std::vector<double> theta_grid(int n_qubits, int n_theta) {
    if (n_theta < 2 * n_qubits + 2)
        throw std::invalid_argument("theta grid needs at least 2N+2 = " + std::to_string(2 * n_qubits + 2) + " points");
    std::vector<double> out(n_theta);
    for (int j = 0; j < n_theta; ++j) out[j] = 2.0 * pi * j / n_theta;
    return out;
}

inline ReadoutGrid direct_grid(const SymmetricDensityMatrix& rho, int n_theta) {
    const int n = rho.n_qubits();
    ReadoutGrid grid{n, theta_grid(n, n_theta), RealMatrix(n + 1, n_theta), Provenance::direct};
    const LocalOps ops(n);
    for (int j = 0; j < n_theta; ++j) {
        const auto p = ops.probabilities(rho.matrix(), grid.theta[j]);
        for (int k = 0; k <= n; ++k) grid.p(k, j) = p[k];
    }
    return grid;
}

struct ProbeRun {
    ReadoutGrid grid;
    std::vector<std::vector<ProbeSample>> samples;  ///< per theta, tau = 0..N
    double coupling = 1.0;
    double max_residual = 0.0;
};

/// The full protocol: for every theta the local operations are applied, the
/// probe is coupled for the N+1 read-out times t_tau and p_n(theta) is
/// reconstructed from its coherence alone.
inline ProbeRun simulate_probe_run(const SymmetricDensityMatrix& rho, int n_theta, double j = 1.0) {
    if (!(j > 0.0) || !std::isfinite(j)) throw std::invalid_argument("coupling J must be positive");
    const int n = rho.n_qubits();
    ProbeRun run{{n, theta_grid(n, n_theta), RealMatrix(n + 1, n_theta), Provenance::reconstructed_from_probe},
                 {}, j, 0.0};
    const LocalOps ops(n);
    run.samples.reserve(n_theta);
    for (int col = 0; col < n_theta; ++col) {
        const auto diag = ops.probabilities(rho.matrix(), run.grid.theta[col]);
        double total = 0.0;
        for (double x : diag) total += x;
        std::vector<ProbeSample> series;
        series.reserve(n + 1);
        for (int tau = 0; tau <= n; ++tau) {
            auto s = evolve_probe_uniform(diag, j, tau, n);
            s.a /= total;  // clipped round-off aside, total is 1
            series.push_back(s);
        }
        const auto rec = reconstruct_probabilities(series, n);
        run.max_residual = std::max(run.max_residual, rec.residual);
        for (int k = 0; k <= n; ++k) run.grid.p(k, col) = rec.p[k];
        run.samples.push_back(std::move(series));
    }
    return run;
}

}  // namespace qprobe
