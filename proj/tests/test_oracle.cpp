#include "qprobe/generation.hpp"
#include "qprobe/oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qprobe;

TEST(OracleEmbedding, DickeStatesOfTwoQubits) {
    const auto spin = HalfInteger::from_twice(2);
    const auto up = oracle::embed_symmetric(dicke_state(spin, HalfInteger::from_int(1)));
    EXPECT_NEAR(std::abs(up.amplitudes[0]), 1.0, 1e-15);
    EXPECT_NEAR(up.amplitudes.norm(), 1.0, 1e-15);
    const auto mid = oracle::embed_symmetric(dicke_state(spin, HalfInteger::from_int(0)));
    EXPECT_NEAR(mid.amplitudes[1].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(mid.amplitudes[2].real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(std::abs(mid.amplitudes[0]) + std::abs(mid.amplitudes[3]), 0.0, 1e-15);
}

TEST(OracleEmbedding, IsometryAndCoherentState) {
    const auto v = oracle::embedding_isometry(7);
    EXPECT_LT(max_abs(v.adjoint() * v - ComplexMatrix::Identity(8, 8)), 1e-13);
    const double r = 1.0 / std::sqrt(2.0);
    const auto product = oracle::tensor_product_state(std::vector<oracle::QubitVector>(6, {r, r}));
    const auto css = oracle::embed_symmetric(coherent_state(HalfInteger::from_twice(6), 0.5 * pi, 0.0));
    EXPECT_NEAR(std::abs(css.amplitudes.dot(product.amplitudes)), 1.0, 1e-13);
}

TEST(OracleEmbedding, CollectiveOperatorsMatchPauliSums) {
    // V^dag (sum_i sigma_x^(i) / 2) V equals J_x from the ladder construction.
    const int n = 6;
    const auto v = oracle::embedding_isometry(n);
    ComplexMatrix sx_sum = ComplexMatrix::Zero(v.rows(), v.rows());
    ComplexMatrix half_x(2, 2);
    half_x << 0.0, 0.5, 0.5, 0.0;
    for (int q = 0; q < n; ++q) {
        for (Eigen::Index c = 0; c < sx_sum.cols(); ++c) {
            ComplexVector e = ComplexVector::Zero(v.rows());
            e[c] = 1.0;
            oracle::detail::apply_gate(e, half_x, q);
            sx_sum.col(c) += e;
        }
    }
    const auto jx = make_operators(HalfInteger::from_twice(n)).jx;
    EXPECT_LT(max_abs(v.adjoint() * sx_sum * v - jx), 1e-13);
}

TEST(OracleEmbedding, RejectsOversizedSystems) {
    EXPECT_THROW(oracle::embedding_isometry(13), std::invalid_argument);
    EXPECT_THROW(oracle::tensor_product_state({}), std::invalid_argument);
}

TEST(OracleEvolution, MatchesDickeEvolutionAtMuEight) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> chit(0.0, 3.0);
    const CentralSpinParams p(11.0, 1.0, 0.1);
    const auto init = initial_plus_x(7);
    const SpectralPropagator dicke(central_spin_hamiltonian(p, 7));
    const auto full0 = oracle::embed_symmetric(init.joint);
    for (int trial = 0; trial < 4; ++trial) {
        const double t = chit(rng) / p.chi();
        const JointState reduced{7, dicke.apply(init.joint.amplitudes, t)};
        const auto full = oracle::full_central_spin_evolution(p, 7, t, full0);
        const double overlap = std::abs(oracle::embed_symmetric(reduced).amplitudes.dot(full.amplitudes));
        EXPECT_GE(overlap, 1.0 - 1e-10);
    }
}

TEST(OracleEvolution, DecoupledQubitsPrecessIndependently) {
    const CentralSpinParams p(3.0, 1.0, 0.0);
    const double t = 0.7;
    const double r = 1.0 / std::sqrt(2.0);
    const auto psi0 = oracle::tensor_product_state(std::vector<oracle::QubitVector>(4, {r, r}), true);
    const auto psi = oracle::full_central_spin_evolution(p, 3, t, psi0);
    std::vector<oracle::QubitVector> expected;
    expected.push_back({r * std::exp(complex(0, -1.5 * t)), r * std::exp(complex(0, 1.5 * t))});
    for (int q = 0; q < 3; ++q) expected.push_back({r * std::exp(complex(0, -0.5 * t)), r * std::exp(complex(0, 0.5 * t))});
    const auto ref = oracle::tensor_product_state(expected, true);
    EXPECT_LT((psi.amplitudes - ref.amplitudes).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OracleBellCorrelator, ProductStateHitsSeparableValue) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> angle(0.0, 2 * pi);
    const double r = 1.0 / std::sqrt(2.0);
    const auto plus = oracle::tensor_product_state(std::vector<oracle::QubitVector>(8, {r, r}));
    // Any axis in the x-y plane: the rotated product state has |<sigma_+>| <= 1/2 per qubit.
    for (int trial = 0; trial < 5; ++trial) EXPECT_LE(oracle::full_bell_correlator(plus, angle(rng)), std::pow(4.0, -8) + 1e-16);
    EXPECT_NEAR(oracle::full_bell_correlator(plus, 0.5 * pi), std::pow(4.0, -8), 1e-15);
}

TEST(OracleBellCorrelator, CatStateAlongX) {
    const double r = 1.0 / std::sqrt(2.0);
    const auto plus = oracle::tensor_product_state(std::vector<oracle::QubitVector>(6, {r, r}));
    const auto minus = oracle::tensor_product_state(std::vector<oracle::QubitVector>(6, {r, -r}));
    oracle::FullState cat{6, false, (plus.amplitudes + minus.amplitudes).normalized()};
    EXPECT_NEAR(oracle::full_bell_correlator(cat, 0.0), 0.25, 1e-12);
}

TEST(OracleBellCorrelator, AgreesWithCollectiveEvaluation) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> angle(0.0, 2 * pi), chit(0.0, pi);
    const auto init = initial_plus_x(7);
    const auto h = oat_hamiltonian(8, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const auto psi = evolve(h, init.oat, chit(rng));
        const auto full = oracle::embed_symmetric(psi);
        for (int k = 0; k < 3; ++k) {
            const double phi = angle(rng);
            EXPECT_NEAR(oracle::full_bell_correlator(full, phi), bell_correlator(psi, phi), 1e-10);
        }
    }
    // Joint representation, probe as qubit 0.
    const CentralSpinParams p(11.0, 1.0, 0.1);
    const JointState joint{7, SpectralPropagator(central_spin_hamiltonian(p, 7)).apply(init.joint.amplitudes, 1.3 / p.chi())};
    const auto full = oracle::embed_symmetric(joint);
    for (double phi : {0.0, 0.4, 2.2, 5.0})
        EXPECT_NEAR(oracle::full_bell_correlator(full, phi), bell_correlator(joint, phi), 1e-10);
}

TEST(OracleLocalOps, MatchesCollectiveRotation) {
    std::mt19937_64 rng(13);
    const int n = 5;
    const auto spin = HalfInteger::from_twice(n);
    const ComplexMatrix rho_sym = testutil::random_density(n + 1, 3, rng);
    const auto v = oracle::embedding_isometry(n);
    const ComplexMatrix rho_full = v * rho_sym * v.adjoint();
    const auto ops = make_operators(spin);
    const double theta = 0.83;
    const ComplexMatrix u = SpectralPropagator(ops.jx).unitary(0.5 * pi) * SpectralPropagator(ops.jz).unitary(theta);
    const ComplexMatrix expected = v * (u * rho_sym * u.adjoint()) * v.adjoint();
    EXPECT_LT(max_abs(oracle::full_local_ops(rho_full, n, theta) - expected), 1e-13);
}

TEST(OracleProbe, ProbeUnchangedAtTimeZero) {
    std::mt19937_64 rng(17);
    const ComplexMatrix rho = testutil::random_density(8, 8, rng);
    ComplexMatrix probe(2, 2);
    probe << 0.5, 0.5, 0.5, 0.5;
    EXPECT_LT(max_abs(oracle::full_probe_simulation(rho, {1.0, 0.5, 0.2}, 0.0, probe) - probe), 1e-15);
}

TEST(OracleProbe, SingleQubitCoherence) {
    // One system qubit in |up> with coupling J: coherence rotates as exp(-2iJt).
    ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
    rho(0, 0) = 1.0;
    ComplexMatrix probe(2, 2);
    probe << 0.5, 0.5, 0.5, 0.5;
    const double j = 0.9, t = 0.4;
    const auto out = oracle::full_probe_simulation(rho, {j}, t, probe);
    EXPECT_LT(std::abs(out(0, 1) - 0.5 * std::exp(complex(0.0, -2.0 * j * t))), 1e-15);
    EXPECT_NEAR(out(0, 0).real(), 0.5, 1e-15);
}
