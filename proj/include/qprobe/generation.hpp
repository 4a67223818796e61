#pragma once

// Central-spin (probe + N qubits) dynamics, its one-axis-twisting limit, and
// the many-body Bell correlator used to track correlation growth.

#include "qprobe/spin_core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qprobe {

/// Probe frequency Omega, system frequency omega and flip-flop coupling g.
/// The detuning is Delta = Omega - omega and the twisting rate chi = g^2/Delta.
class CentralSpinParams {
public:
    CentralSpinParams(double omega_probe, double omega_sys, double g)
        : omega_probe_(omega_probe), omega_sys_(omega_sys), g_(g) {
        if (!std::isfinite(omega_probe) || !std::isfinite(omega_sys) || !std::isfinite(g))
            throw std::invalid_argument("central-spin parameters must be finite");
        if (detuning() == 0.0) throw std::invalid_argument("detuning Omega - omega must be non-zero");
    }

    double omega_probe() const { return omega_probe_; }
    double omega_sys() const { return omega_sys_; }
    double g() const { return g_; }
    double detuning() const { return omega_probe_ - omega_sys_; }
    double chi() const { return g_ * g_ / detuning(); }
    double dispersive_ratio() const { return std::abs(g_ / detuning()); }
    /// The effective description is only trusted for g/|Delta| <= 0.2.
    bool outside_dispersive_window() const { return dispersive_ratio() > 0.2; }

private:
    double omega_probe_;
    double omega_sys_;
    double g_;
};

/// Pure state on Dicke(N) x probe. Index = probe * (N+1) + k with probe 0 = up,
/// 1 = down and k the Dicke index (m = N/2 - k).
struct JointState {
    int n_qubits = 0;
    ComplexVector amplitudes;

    int dim() const { return static_cast<int>(amplitudes.size()); }
};

namespace detail {

inline ComplexMatrix probe_sigma_z() {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = -1.0;
    return s;
}

inline ComplexMatrix probe_sigma_plus() {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(0, 1) = 1.0;  // |up><down|
    return s;
}

inline void require_qubits(int n_qubits) {
    if (n_qubits < 1) throw std::invalid_argument("need at least one system qubit");
}

inline HalfInteger system_spin(int n_qubits) { return HalfInteger::from_twice(n_qubits); }

}  // namespace detail

inline int joint_index(int n_qubits, int probe, int dicke_index) {
    return probe * (n_qubits + 1) + dicke_index;
}

/// (Omega/2) sigma_z^pr + omega J_z + g (J_+ sigma_-^pr + J_- sigma_+^pr).
inline ComplexMatrix central_spin_hamiltonian(const CentralSpinParams& params, int n_qubits) {
    detail::require_qubits(n_qubits);
    const auto ops = make_operators(detail::system_spin(n_qubits));
    const ComplexMatrix id_sys = ComplexMatrix::Identity(n_qubits + 1, n_qubits + 1);
    const ComplexMatrix sp = detail::probe_sigma_plus();
    const ComplexMatrix sm = sp.adjoint();
    return 0.5 * params.omega_probe() * kron(detail::probe_sigma_z(), id_sys) +
           params.omega_sys() * kron(ComplexMatrix::Identity(2, 2), ops.jz) +
           params.g() * (kron(sm, ops.jplus) + kron(sp, ops.jminus));
}

/// Second-order Schrieffer-Wolff Hamiltonian of the central-spin model,
///   H0 - chi (J_z - sigma_z^pr (J^2 - J_z^2)),
/// whose probe-down block is omega S_z + chi S_z^2 up to a constant.
inline ComplexMatrix sw_effective_hamiltonian(const CentralSpinParams& params, int n_qubits) {
    detail::require_qubits(n_qubits);
    const auto ops = make_operators(detail::system_spin(n_qubits));
    const double j = 0.5 * n_qubits;
    const double chi = params.chi();
    const ComplexMatrix id_sys = ComplexMatrix::Identity(n_qubits + 1, n_qubits + 1);
    const ComplexMatrix transverse = j * (j + 1.0) * id_sys - ops.jz * ops.jz;
    return 0.5 * params.omega_probe() * kron(detail::probe_sigma_z(), id_sys) +
           (params.omega_sys() - chi) * kron(ComplexMatrix::Identity(2, 2), ops.jz) +
           chi * kron(detail::probe_sigma_z(), transverse);
}

/// Composite S_z = J_z + sigma_z^pr / 2 on the joint space.
inline ComplexMatrix total_sz_joint(int n_qubits) {
    detail::require_qubits(n_qubits);
    const auto ops = make_operators(detail::system_spin(n_qubits));
    return kron(ComplexMatrix::Identity(2, 2), ops.jz) +
           0.5 * kron(detail::probe_sigma_z(), ComplexMatrix::Identity(n_qubits + 1, n_qubits + 1));
}

/// chi m^2 on the spin-mu/2 manifold.
inline ComplexMatrix oat_hamiltonian(int mu, double chi) {
    if (mu < 2) throw std::invalid_argument("OAT needs mu >= 2");
    const RealVector m = CollectiveBasis(HalfInteger::from_twice(mu)).label_values();
    return (chi * m.array().square()).matrix().cast<complex>().asDiagonal();
}

/// Maps a state of the spin-(N+1)/2 manifold (all mu = N+1 qubits symmetric)
/// into the joint Dicke(N) x probe space using
///   |M> = sqrt(u/mu) |M-1/2>|up> + sqrt((mu-u)/mu) |M+1/2>|down>,  u = mu/2 + M.
inline JointState embed_collective_in_joint(const StateVector& state) {
    const int mu = state.spin.twice();
    const int n_qubits = mu - 1;
    detail::require_qubits(n_qubits);
    if (state.dim() != mu + 1) throw std::invalid_argument("state dimension mismatch");
    JointState out{n_qubits, ComplexVector::Zero(2 * (n_qubits + 1))};
    for (int big_k = 0; big_k <= mu; ++big_k) {
        const int ups = mu - big_k;
        // Probe up leaves ups-1 system spins up: Dicke index n_qubits - (ups - 1) = big_k.
        if (ups > 0)
            out.amplitudes[joint_index(n_qubits, 0, big_k)] +=
                std::sqrt(static_cast<double>(ups) / mu) * state.amplitudes[big_k];
        if (ups < mu)
            out.amplitudes[joint_index(n_qubits, 1, big_k - 1)] +=
                std::sqrt(static_cast<double>(mu - ups) / mu) * state.amplitudes[big_k];
    }
    return out;
}

struct InitialStates {
    JointState joint;  ///< CSS_x on Dicke(N) x probe |+x>
    StateVector oat;   ///< CSS_x on the spin-(N+1)/2 manifold
};

/// |+x>^(N+1) in both representations.
inline InitialStates initial_plus_x(int n_qubits) {
    detail::require_qubits(n_qubits);
    const StateVector sys = coherent_state(detail::system_spin(n_qubits), 0.5 * pi, 0.0);
    JointState joint{n_qubits, ComplexVector(2 * (n_qubits + 1))};
    const double r = 1.0 / std::sqrt(2.0);
    joint.amplitudes.head(n_qubits + 1) = r * sys.amplitudes;
    joint.amplitudes.tail(n_qubits + 1) = r * sys.amplitudes;
    return {joint, coherent_state(HalfInteger::from_twice(n_qubits + 1), 0.5 * pi, 0.0)};
}

/// exp(-i chi_t J_z^2) applied to CSS_x of n_qubits qubits.
inline StateVector one_axis_twisted_state(int n_qubits, double chi_t) {
    detail::require_qubits(n_qubits);
    const auto spin = detail::system_spin(n_qubits);
    StateVector psi = coherent_state(spin, 0.5 * pi, 0.0);
    const RealVector m = CollectiveBasis(spin).label_values();
    for (int k = 0; k <= n_qubits; ++k) psi.amplitudes[k] *= std::exp(complex(0.0, -chi_t * m[k] * m[k]));
    return psi;
}

/// Rows of the axis-alignment rotation that reach the two extreme states, plus
/// the total-S_z label of every basis state. E(azimuth) only needs these.
class BellFrame {
public:
    explicit BellFrame(HalfInteger spin) {
        const ComplexMatrix ry = rotation_about_y(spin, 0.5 * pi);
        top_ = ry.row(0).transpose();
        bottom_ = ry.row(ry.rows() - 1).transpose();
        labels_ = CollectiveBasis(spin).label_values();
        mu_ = spin.twice();
    }

    explicit BellFrame(int n_qubits) {
        detail::require_qubits(n_qubits);
        const auto sys_spin = detail::system_spin(n_qubits);
        const ComplexMatrix ry =
            kron(rotation_about_y(HalfInteger::from_twice(1), 0.5 * pi), rotation_about_y(sys_spin, 0.5 * pi));
        top_ = ry.row(0).transpose();
        bottom_ = ry.row(ry.rows() - 1).transpose();
        const RealVector m = CollectiveBasis(sys_spin).label_values();
        labels_.resize(2 * m.size());
        labels_ << (m.array() + 0.5).matrix(), (m.array() - 0.5).matrix();
        mu_ = n_qubits + 1;
    }

    int mu() const { return mu_; }
    Eigen::Index dim() const { return labels_.size(); }

    /// |<top| U rho U^dag |bottom>|^2 for rho = |psi><psi| and
    /// U = exp(-i pi/2 S_y) exp(-i azimuth S_z).
    double correlator(const ComplexVector& psi, double azimuth) const {
        if (psi.size() != dim()) throw std::invalid_argument("state dimension does not match Bell frame");
        complex up = 0.0, down = 0.0;
        for (Eigen::Index k = 0; k < dim(); ++k) {
            const complex rotated = std::exp(complex(0.0, -azimuth * labels_[k])) * psi[k];
            up += top_[k] * rotated;
            down += bottom_[k] * rotated;
        }
        return std::norm(up) * std::norm(down);
    }

private:
    ComplexVector top_, bottom_;
    RealVector labels_;
    int mu_ = 0;
};

namespace detail {

inline void require_normalized(const ComplexVector& psi) {
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw std::invalid_argument("state is not normalized");
}

}  // namespace detail

inline double bell_correlator(const JointState& state, double azimuth) {
    detail::require_normalized(state.amplitudes);
    return BellFrame(state.n_qubits).correlator(state.amplitudes, azimuth);
}

inline double bell_correlator(const StateVector& state, double azimuth) {
    detail::require_normalized(state.amplitudes);
    return BellFrame(state.spin).correlator(state.amplitudes, azimuth);
}

/// The z-basis variant: |<top|psi><psi|bottom>|^2 without any axis rotation.
inline double extreme_coherence(const ComplexVector& psi) {
    return std::norm(psi[0]) * std::norm(psi[psi.size() - 1]);
}

struct BellMaximum {
    double e_max = 0.0;
    double azimuth_star = 0.0;
};

/// Maximum of the correlator over a uniform azimuth grid, then one golden-section
/// pass inside the bracket around the best grid point.
inline BellMaximum bell_correlator_max(const BellFrame& frame, const ComplexVector& psi, int grid_size) {
    if (grid_size < 8) throw std::invalid_argument("azimuth grid needs at least 8 points");
    const double step = 2.0 * pi / grid_size;
    BellMaximum best{-1.0, 0.0};
    for (int j = 0; j < grid_size; ++j) {
        const double phi = j * step;
        const double e = frame.correlator(psi, phi);
        if (e > best.e_max) best = {e, phi};
    }
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = best.azimuth_star - step, hi = best.azimuth_star + step;
    double c = hi - ratio * (hi - lo), d = lo + ratio * (hi - lo);
    double fc = frame.correlator(psi, c), fd = frame.correlator(psi, d);
    while (hi - lo > 1e-11) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = frame.correlator(psi, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = frame.correlator(psi, d);
        }
    }
    const double mid = 0.5 * (lo + hi);
    const double fm = frame.correlator(psi, mid);
    if (fm > best.e_max) best = {fm, mid};
    best.azimuth_star = std::fmod(std::fmod(best.azimuth_star, 2.0 * pi) + 2.0 * pi, 2.0 * pi);
    return best;
}

inline BellMaximum bell_correlator_max(const JointState& state, int grid_size) {
    detail::require_normalized(state.amplitudes);
    return bell_correlator_max(BellFrame(state.n_qubits), state.amplitudes, grid_size);
}

inline BellMaximum bell_correlator_max(const StateVector& state, int grid_size) {
    detail::require_normalized(state.amplitudes);
    return bell_correlator_max(BellFrame(state.spin), state.amplitudes, grid_size);
}

/// How a twisted state is oriented before read-out. The bare state keeps its
/// mean spin along x with the narrow axis tilted in the y-z plane; `squeezing`
/// rotates about x so the narrow axis lies along y (the quadrature the phase
/// imprint about z is sensitive to); `bell` rotates the optimal Bell axis onto z.
enum class TwistAlignment { none, squeezing, bell };

inline StateVector aligned_twisted_state(int n_qubits, double chi_t, TwistAlignment alignment,
                                         int azimuth_grid_size = 64) {
    StateVector psi = one_axis_twisted_state(n_qubits, chi_t);
    if (alignment == TwistAlignment::none) return psi;
    const auto ops = make_operators(psi.spin);
    if (alignment == TwistAlignment::bell) {
        const auto best = bell_correlator_max(psi, azimuth_grid_size);
        psi.amplitudes = rotation_about_y(psi.spin, 0.5 * pi) *
                         (rotation_about_z_diagonal(psi.spin, best.azimuth_star).asDiagonal() * psi.amplitudes);
        return psi;
    }
    auto expect = [&](const ComplexMatrix& op) { return psi.amplitudes.dot(op * psi.amplitudes).real(); };
    const double my = expect(ops.jy), mz = expect(ops.jz);
    const double vyy = expect(ops.jy * ops.jy) - my * my;
    const double vzz = expect(ops.jz * ops.jz) - mz * mz;
    const double vyz = 0.5 * expect(ops.jy * ops.jz + ops.jz * ops.jy) - my * mz;
    const double narrow = 0.5 * std::atan2(2.0 * vyz, vyy - vzz) + 0.5 * pi;
    const SpectralPropagator about_x(ops.jx);
    StateVector best = psi;
    double best_var = std::numeric_limits<double>::infinity();
    for (double angle : {narrow, -narrow}) {
        const ComplexVector rotated = about_x.apply(psi.amplitudes, angle);
        const double mean = rotated.dot(ops.jy * rotated).real();
        const double var = rotated.dot(ops.jy * ops.jy * rotated).real() - mean * mean;
        if (var < best_var) {
            best_var = var;
            best.amplitudes = rotated;
        }
    }
    return best;
}

struct GenerationSweepResult {
    std::vector<double> times;  ///< chi * t
    std::vector<double> q_exact;
    std::vector<double> q_oat;
    std::vector<double> azimuth_star;  ///< optimal azimuth of the exact path
    CentralSpinParams params;
    int mu = 0;
};

/// Evolves |+x>^(N+1) under the central-spin Hamiltonian (physical time
/// t = chi_t / chi, lab frame) and under chi S_z^2, recording the optimized
/// Bell correlator of each path at every chi*t.
inline GenerationSweepResult sweep(const CentralSpinParams& params, int n_qubits,
                                   const std::vector<double>& times, int azimuth_grid_size) {
    if (times.empty()) throw std::invalid_argument("time grid is empty");
    for (double t : times)
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("times must be finite and non-negative");
    const int mu = n_qubits + 1;
    const auto initial = initial_plus_x(n_qubits);
    const SpectralPropagator exact(central_spin_hamiltonian(params, n_qubits));
    const SpectralPropagator oat(oat_hamiltonian(mu, 1.0));  // evolved for chi*t directly
    const BellFrame joint_frame(n_qubits);
    const BellFrame oat_frame(HalfInteger::from_twice(mu));

    GenerationSweepResult out{times, {}, {}, {}, params, mu};
    out.q_exact.resize(times.size());
    out.q_oat.resize(times.size());
    out.azimuth_star.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const ComplexVector psi_exact = exact.apply(initial.joint.amplitudes, times[i] / params.chi());
        const ComplexVector psi_oat = oat.apply(initial.oat.amplitudes, times[i]);
        const auto best_exact = bell_correlator_max(joint_frame, psi_exact, azimuth_grid_size);
        const auto best_oat = bell_correlator_max(oat_frame, psi_oat, azimuth_grid_size);
        out.q_exact[i] = q_value(best_exact.e_max, mu);
        out.q_oat[i] = q_value(best_oat.e_max, mu);
        out.azimuth_star[i] = best_exact.azimuth_star;
    }
    return out;
}

/// Spread max - min of q_exact over one fast period 2 pi / |Delta| of physical
/// time starting at each chi*t. This resolves the detuning-frequency wiggle that
/// a coarse chi*t grid only aliases.
inline std::vector<double> fast_oscillation_spread(const CentralSpinParams& params, int n_qubits,
                                                   const std::vector<double>& times, int azimuth_grid_size,
                                                   int samples = 16) {
    if (samples < 2) throw std::invalid_argument("need at least two samples per period");
    const int mu = n_qubits + 1;
    const auto initial = initial_plus_x(n_qubits);
    const SpectralPropagator exact(central_spin_hamiltonian(params, n_qubits));
    const BellFrame frame(n_qubits);
    const double period = 2.0 * pi / std::abs(params.detuning());
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k = 0; k < samples; ++k) {
            const double t = times[i] / params.chi() + period * k / samples;
            const double q = q_value(bell_correlator_max(frame, exact.apply(initial.joint.amplitudes, t), azimuth_grid_size).e_max, mu);
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        out[i] = hi - lo;
    }
    return out;
}

/// 1 - |<exact|effective>|^2 between the exact central-spin state and the
/// second-order effective state, both in the lab frame, averaged over one fast
/// period 2 pi / |Delta| starting at chi*t (the instantaneous value oscillates
/// at the detuning frequency).
inline double effective_fidelity_deficit(const CentralSpinParams& params, int n_qubits, double chi_t,
                                         int samples = 16) {
    if (samples < 1) throw std::invalid_argument("need at least one sample");
    const auto initial = initial_plus_x(n_qubits);
    const SpectralPropagator exact(central_spin_hamiltonian(params, n_qubits));
    const SpectralPropagator effective(sw_effective_hamiltonian(params, n_qubits));
    const double t0 = chi_t / params.chi();
    const double period = 2.0 * pi / std::abs(params.detuning());
    double total = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = t0 + period * k / samples;
        const complex overlap =
            effective.apply(initial.joint.amplitudes, t).dot(exact.apply(initial.joint.amplitudes, t));
        total += 1.0 - std::norm(overlap);
    }
    return total / samples;
}

}  // namespace qprobe
