#pragma once

// Exponential-cost reference implementations on the full tensor-product space.
// Used to validate every Dicke-basis shortcut; never on a hot path.
//
// Bit convention: bit i of a basis index is qubit i, 0 = spin up. When a probe
// is present it is qubit 0 and the system qubits are 1..N.

#include "qprobe/generation.hpp"
#include "qprobe/spin_core.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprobe::oracle {

inline constexpr int max_state_qubits = 12;
inline constexpr int max_density_qubits = 10;
inline constexpr int max_evolution_system_qubits = 11;

struct FullState {
    int qubits = 0;
    bool has_probe = false;
    ComplexVector amplitudes;
};

using QubitVector = std::array<complex, 2>;  ///< (up, down) amplitudes

namespace detail {

inline void guard(int qubits, int limit, const char* what) {
    if (qubits < 1 || qubits > limit)
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(qubits) +
                                    " qubits outside oracle limit 1.." + std::to_string(limit));
}

inline double binomial(int n, int k) {
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

inline int downs(unsigned long index) { return std::popcount(index); }

/// Applies a 2x2 gate to one qubit of a state vector (or of each column of a
/// matrix when called on its columns).
inline void apply_gate(ComplexVector& v, const ComplexMatrix& gate, int qubit) {
    const Eigen::Index bit = Eigen::Index{1} << qubit;
    for (Eigen::Index b = 0; b < v.size(); ++b) {
        if (b & bit) continue;
        const complex up = v[b], down = v[b | bit];
        v[b] = gate(0, 0) * up + gate(0, 1) * down;
        v[b | bit] = gate(1, 0) * up + gate(1, 1) * down;
    }
}

inline ComplexMatrix single_qubit_rotation_y(double angle) {
    ComplexMatrix r(2, 2);
    r << std::cos(0.5 * angle), -std::sin(0.5 * angle), std::sin(0.5 * angle), std::cos(0.5 * angle);
    return r;
}

inline ComplexMatrix single_qubit_rotation_z(double angle) {
    ComplexMatrix r = ComplexMatrix::Zero(2, 2);
    r(0, 0) = std::exp(complex(0.0, -0.5 * angle));
    r(1, 1) = std::exp(complex(0.0, 0.5 * angle));
    return r;
}

inline ComplexMatrix single_qubit_rotation_x(double angle) {
    ComplexMatrix r(2, 2);
    r << std::cos(0.5 * angle), complex(0.0, -std::sin(0.5 * angle)), complex(0.0, -std::sin(0.5 * angle)),
        std::cos(0.5 * angle);
    return r;
}

}  // namespace detail

inline FullState tensor_product_state(const std::vector<QubitVector>& qubits, bool has_probe = false) {
    detail::guard(static_cast<int>(qubits.size()), max_state_qubits, "tensor_product_state");
    const Eigen::Index dim = Eigen::Index{1} << qubits.size();
    FullState out{static_cast<int>(qubits.size()), has_probe, ComplexVector(dim)};
    for (Eigen::Index b = 0; b < dim; ++b) {
        complex amp = 1.0;
        for (std::size_t q = 0; q < qubits.size(); ++q) amp *= qubits[q][(b >> q) & 1];
        out.amplitudes[b] = amp;
    }
    return out;
}

/// |m> -> normalized symmetric superposition of bit strings with N/2 + m ups.
inline FullState embed_symmetric(const StateVector& state) {
    const int n = state.spin.twice();
    detail::guard(n, max_state_qubits, "embed_symmetric");
    const Eigen::Index dim = Eigen::Index{1} << n;
    FullState out{n, false, ComplexVector(dim)};
    for (Eigen::Index b = 0; b < dim; ++b) {
        const int d = detail::downs(static_cast<unsigned long>(b));
        out.amplitudes[b] = state.amplitudes[d] / std::sqrt(detail::binomial(n, d));
    }
    return out;
}

/// Joint Dicke(N) x probe state -> N+1 qubits with the probe as qubit 0.
inline FullState embed_symmetric(const JointState& state) {
    const int n = state.n_qubits;
    detail::guard(n + 1, max_state_qubits, "embed_symmetric");
    const Eigen::Index dim = Eigen::Index{1} << (n + 1);
    FullState out{n + 1, true, ComplexVector(dim)};
    for (Eigen::Index b = 0; b < dim; ++b) {
        const int probe = static_cast<int>(b & 1);
        const int d = detail::downs(static_cast<unsigned long>(b >> 1));
        out.amplitudes[b] = state.amplitudes[joint_index(n, probe, d)] / std::sqrt(detail::binomial(n, d));
    }
    return out;
}

/// Columns are the embedded Dicke states of N qubits: 2^N x (N+1).
inline ComplexMatrix embedding_isometry(int n_qubits) {
    detail::guard(n_qubits, max_state_qubits, "embedding_isometry");
    const auto spin = HalfInteger::from_twice(n_qubits);
    ComplexMatrix out(Eigen::Index{1} << n_qubits, n_qubits + 1);
    for (int k = 0; k <= n_qubits; ++k)
        out.col(k) = embed_symmetric(dicke_state(spin, spin - k)).amplitudes;
    return out;
}

/// Exact evolution under the central-spin Hamiltonian written over individual
/// Pauli operators on 2^(N+1) states. The number of down spins is conserved,
/// so each sector is diagonalized separately.
inline FullState full_central_spin_evolution(const CentralSpinParams& params, int n_qubits, double t,
                                             const FullState& psi0) {
    detail::guard(n_qubits, max_evolution_system_qubits, "full_central_spin_evolution");
    const int qubits = n_qubits + 1;
    if (psi0.qubits != qubits || !psi0.has_probe)
        throw std::invalid_argument("initial state must be N system qubits plus the probe");
    const Eigen::Index dim = Eigen::Index{1} << qubits;

    std::vector<std::vector<Eigen::Index>> sectors(qubits + 1);
    for (Eigen::Index b = 0; b < dim; ++b) sectors[detail::downs(static_cast<unsigned long>(b))].push_back(b);

    FullState out{qubits, true, ComplexVector::Zero(dim)};
    for (const auto& sector : sectors) {
        const Eigen::Index size = static_cast<Eigen::Index>(sector.size());
        std::vector<Eigen::Index> position(dim, -1);
        for (Eigen::Index i = 0; i < size; ++i) position[sector[i]] = i;
        ComplexMatrix h = ComplexMatrix::Zero(size, size);
        for (Eigen::Index i = 0; i < size; ++i) {
            const Eigen::Index b = sector[i];
            const double s_probe = (b & 1) ? -1.0 : 1.0;
            double diag = 0.5 * params.omega_probe() * s_probe;
            for (int q = 1; q < qubits; ++q) diag += 0.5 * params.omega_sys() * (((b >> q) & 1) ? -1.0 : 1.0);
            h(i, i) = diag;
            // g (sigma_+^i sigma_-^pr + sigma_-^i sigma_+^pr): swap probe with an anti-aligned qubit.
            for (int q = 1; q < qubits; ++q) {
                const bool probe_down = b & 1;
                const bool qubit_down = (b >> q) & 1;
                if (probe_down == qubit_down) continue;
                const Eigen::Index flipped = b ^ 1 ^ (Eigen::Index{1} << q);
                h(position[flipped], i) += params.g();
            }
        }
        ComplexVector local(size);
        for (Eigen::Index i = 0; i < size; ++i) local[i] = psi0.amplitudes[sector[i]];
        const ComplexVector evolved = SpectralPropagator(h).apply(local, t);
        for (Eigen::Index i = 0; i < size; ++i) out.amplitudes[sector[i]] = evolved[i];
    }
    return out;
}

/// |<prod_k sigma_+^(k)>|^2 with every raising operator taken about the axis
/// selected by `azimuth`: each qubit is rotated by exp(-i pi/2 sigma_y/2)
/// exp(-i azimuth sigma_z/2) and the z-basis raising operators are applied one
/// qubit at a time.
inline double full_bell_correlator(const FullState& state, double azimuth) {
    detail::guard(state.qubits, max_state_qubits, "full_bell_correlator");
    ComplexVector v = state.amplitudes;
    const ComplexMatrix rz = detail::single_qubit_rotation_z(azimuth);
    const ComplexMatrix ry = detail::single_qubit_rotation_y(0.5 * pi);
    for (int q = 0; q < state.qubits; ++q) {
        detail::apply_gate(v, rz, q);
        detail::apply_gate(v, ry, q);
    }
    ComplexMatrix raise = ComplexMatrix::Zero(2, 2);
    raise(0, 1) = 1.0;
    ComplexVector raised = v;
    for (int q = 0; q < state.qubits; ++q) detail::apply_gate(raised, raise, q);
    return std::norm(v.dot(raised));
}

/// exp(-i pi/2 J_x) exp(-i theta J_z) applied qubit by qubit to a full density matrix.
inline ComplexMatrix full_local_ops(const ComplexMatrix& rho, int n_qubits, double theta) {
    detail::guard(n_qubits, max_density_qubits, "full_local_ops");
    const ComplexMatrix gate = detail::single_qubit_rotation_x(0.5 * pi) * detail::single_qubit_rotation_z(theta);
    ComplexMatrix out = rho;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        ComplexVector col = out.col(c);
        for (int q = 0; q < n_qubits; ++q) detail::apply_gate(col, gate, q);
        out.col(c) = col;
    }
    ComplexMatrix adj = out.adjoint();
    for (Eigen::Index c = 0; c < adj.cols(); ++c) {
        ComplexVector col = adj.col(c);
        for (int q = 0; q < n_qubits; ++q) detail::apply_gate(col, gate, q);
        adj.col(c) = col;
    }
    return adj.adjoint();
}

/// Builds rho_N (x) rho_probe, evolves it exactly under
/// sum_i J_i sigma_z^(i) sigma_z^(pr) and traces out the N system qubits.
/// Joint index = (system bits << 1) | probe bit.
inline ComplexMatrix full_probe_simulation(const ComplexMatrix& rho_n, const std::vector<double>& couplings,
                                           double t, const ComplexMatrix& probe_init) {
    const int n = static_cast<int>(couplings.size());
    detail::guard(n, max_density_qubits, "full_probe_simulation");
    const Eigen::Index sys_dim = Eigen::Index{1} << n;
    if (rho_n.rows() != sys_dim || rho_n.cols() != sys_dim)
        throw std::invalid_argument("system density matrix must be 2^N x 2^N");
    if (probe_init.rows() != 2 || probe_init.cols() != 2)
        throw std::invalid_argument("probe state must be 2x2");

    const ComplexMatrix joint = kron(rho_n, probe_init);
    const Eigen::Index dim = joint.rows();
    RealVector energy(dim);
    for (Eigen::Index b = 0; b < dim; ++b) {
        const double s_probe = (b & 1) ? -1.0 : 1.0;
        double e = 0.0;
        for (int i = 0; i < n; ++i) e += couplings[i] * (((b >> (i + 1)) & 1) ? -1.0 : 1.0);
        energy[b] = e * s_probe;
    }
    ComplexMatrix evolved(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            evolved(r, c) = joint(r, c) * std::exp(complex(0.0, -(energy[r] - energy[c]) * t));

    ComplexMatrix probe = ComplexMatrix::Zero(2, 2);
    for (Eigen::Index s = 0; s < sys_dim; ++s)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) probe(a, b) += evolved((s << 1) | a, (s << 1) | b);
    return probe;
}

/// Full-space diagonal of a system density matrix, as probabilities p_s.
inline std::vector<double> diagonal_probabilities(const ComplexMatrix& rho_n) {
    std::vector<double> out(rho_n.rows());
    for (Eigen::Index i = 0; i < rho_n.rows(); ++i) out[i] = rho_n(i, i).real();
    return out;
}

}  // namespace qprobe::oracle
