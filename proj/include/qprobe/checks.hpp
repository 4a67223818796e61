#pragma once

// Seeded oracle-equivalence suite: every fast Dicke-basis path is compared
// against the brute-force qubit-by-qubit oracle. Used by `qprobe oracle-check`
// and the acceptance run.

#include "qprobe/generation.hpp"
#include "qprobe/oracle.hpp"
#include "qprobe/readout.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qprobe::checks {

struct CheckResult {
    std::string name;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    int cases = 0;
    bool pass = false;
};

struct OracleSuiteConfig {
    int mu = 8;         ///< qubits in the generation checks (system + probe)
    int n_qubits = 8;   ///< system qubits in the read-out checks
    int trials = 5;
    std::uint64_t seed = 0;
    double omega_probe = 11.0;
    double omega_sys = 1.0;
    double g = 0.05;
};

inline void validate(const OracleSuiteConfig& c) {
    if (c.mu < 2 || c.mu > oracle::max_evolution_system_qubits + 1)
        throw std::invalid_argument("mu must lie in [2, " + std::to_string(oracle::max_evolution_system_qubits + 1) +
                                    "] for the brute-force oracle");
    if (c.n_qubits < 1 || c.n_qubits > oracle::max_density_qubits)
        throw std::invalid_argument("n_qubits must lie in [1, " + std::to_string(oracle::max_density_qubits) +
                                    "] for the brute-force oracle");
    if (c.trials < 1) throw std::invalid_argument("trials must be at least 1");
    CentralSpinParams(c.omega_probe, c.omega_sys, c.g);
    if (c.g == 0.0) throw std::invalid_argument("g must be non-zero (time is measured in units of 1/chi)");
}

/// Wishart-style random density matrix of the given rank.
inline ComplexMatrix random_density_matrix(int dim, int rank, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexMatrix g(dim, rank);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = complex(normal(rng), normal(rng));
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return symmetrized(rho);
}

namespace detail {

inline CheckResult finish(std::string name, double deviation, double tolerance, int cases) {
    return {std::move(name), deviation, tolerance, cases, deviation <= tolerance};
}

inline ComplexMatrix plus_x_probe() {
    ComplexMatrix probe(2, 2);
    probe << 0.5, 0.5, 0.5, 0.5;
    return probe;
}

}  // namespace detail

/// Runs all checks in a fixed order; identical config gives identical results.
inline std::vector<CheckResult> run_oracle_suite(const OracleSuiteConfig& config) {
    validate(config);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<CheckResult> out;

    const int n_sys = config.mu - 1;
    const CentralSpinParams params(config.omega_probe, config.omega_sys, config.g);
    const auto init = initial_plus_x(n_sys);
    const auto full0 = oracle::embed_symmetric(init.joint);

    {
        const double r = 1.0 / std::sqrt(2.0);
        const auto product = oracle::tensor_product_state(std::vector<oracle::QubitVector>(config.mu, {r, r}), true);
        const double a = std::abs(1.0 - std::abs(full0.amplitudes.dot(product.amplitudes)));
        const double b = std::abs(1.0 - std::abs(oracle::embed_symmetric(init.oat).amplitudes.dot(product.amplitudes)));
        out.push_back(detail::finish("initial_state_embedding", std::max(a, b), 1e-12, 2));
    }

    {
        const SpectralPropagator dicke(central_spin_hamiltonian(params, n_sys));
        const auto oat_h = oat_hamiltonian(config.mu, 1.0);
        double overlap_dev = 0.0, bell_dev = 0.0;
        int bell_cases = 0;
        for (int trial = 0; trial < config.trials; ++trial) {
            const double chi_t = pi * unit(rng);
            const double t = chi_t / params.chi();
            const JointState reduced{n_sys, dicke.apply(init.joint.amplitudes, t)};
            const auto full = oracle::full_central_spin_evolution(params, n_sys, t, full0);
            const auto embedded = oracle::embed_symmetric(reduced);
            overlap_dev = std::max(overlap_dev, std::abs(1.0 - std::abs(embedded.amplitudes.dot(full.amplitudes))));

            const auto twisted = evolve(oat_h, init.oat, chi_t);
            const auto twisted_full = oracle::embed_symmetric(twisted);
            for (int k = 0; k < 3; ++k) {
                const double phi = 2.0 * pi * unit(rng);
                bell_dev = std::max(bell_dev, std::abs(oracle::full_bell_correlator(full, phi) - bell_correlator(reduced, phi)));
                bell_dev = std::max(bell_dev,
                                    std::abs(oracle::full_bell_correlator(twisted_full, phi) - bell_correlator(twisted, phi)));
                bell_cases += 2;
            }
        }
        out.push_back(detail::finish("generation_overlap", overlap_dev, 1e-10, config.trials));
        out.push_back(detail::finish("bell_correlator", bell_dev, 1e-10, bell_cases));
    }

    const int n = config.n_qubits;
    const auto v = oracle::embedding_isometry(n);
    {
        double dev = 0.0;
        const LocalOps ops(n);
        for (int trial = 0; trial < config.trials; ++trial) {
            const ComplexMatrix rho_sym = random_density_matrix(n + 1, 3, rng);
            const double theta = 2.0 * pi * unit(rng);
            const ComplexMatrix u = ops.unitary(theta);
            const ComplexMatrix expected = v * (u * rho_sym * u.adjoint()) * v.adjoint();
            dev = std::max(dev, max_abs(oracle::full_local_ops(v * rho_sym * v.adjoint(), n, theta) - expected));
        }
        out.push_back(detail::finish("local_operations", dev, 1e-10, config.trials));
    }

    {
        std::uniform_real_distribution<double> coupling(-1.0, 1.0);
        double coherence_dev = 0.0, population_dev = 0.0;
        const auto probe = detail::plus_x_probe();
        for (int trial = 0; trial < config.trials; ++trial) {
            std::vector<double> js(n);
            for (auto& x : js) x = coupling(rng);
            const ComplexMatrix rho = random_density_matrix(1 << n, 4, rng);
            const auto p_full = oracle::diagonal_probabilities(rho);
            const double t = 5.0 * unit(rng);
            const ComplexMatrix traced = oracle::full_probe_simulation(rho, js, t, probe);
            coherence_dev = std::max(coherence_dev, std::abs(traced(0, 1) / 0.5 - probe_coherence_general(p_full, js, t)));
            population_dev = std::max(population_dev, std::abs(traced(0, 0).real() - 0.5));
        }
        out.push_back(detail::finish("probe_coherence_sum", coherence_dev, 1e-12, config.trials));
        out.push_back(detail::finish("probe_population_constant", population_dev, 1e-12, config.trials));
    }

    {
        double dev = 0.0;
        const double j = 1.0;
        for (int trial = 0; trial < config.trials; ++trial) {
            const ComplexMatrix rho_sym = random_density_matrix(n + 1, 2, rng);
            const ComplexMatrix rho_full = v * rho_sym * v.adjoint();
            const auto p_full = oracle::diagonal_probabilities(rho_full);
            std::vector<double> p_sym(n + 1);
            for (int k = 0; k <= n; ++k) p_sym[k] = rho_sym(k, k).real();
            for (int tau = 0; tau <= n; ++tau) {
                const complex general = probe_coherence_general(p_full, std::vector<double>(n, j), time_from_tau(j, tau, n));
                dev = std::max(dev, std::abs(general - probe_coherence_symmetric(p_sym, tau, n)));
            }
        }
        out.push_back(detail::finish("symmetric_probe_coherence", dev, 1e-12, config.trials * (n + 1)));
    }
    return out;
}

inline bool all_pass(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

}  // namespace qprobe::checks
