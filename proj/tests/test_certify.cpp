#include "qprobe/certify.hpp"
#include "qprobe/generation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

using namespace qprobe;

namespace {

StateVector css_x(int n) { return coherent_state(HalfInteger::from_twice(n), 0.5 * pi, 0.0); }
StateVector ghz(int n) { return ghz_state(HalfInteger::from_twice(n)); }

ReadoutGrid grid_of(const StateVector& psi, int n_theta = 0) {
    const int n = psi.spin.twice();
    return direct_grid(SymmetricDensityMatrix::pure(psi), n_theta > 0 ? n_theta : default_theta_points(n));
}

/// Squeezing from exact expectation values: <J_z>, Var(J_z) and the slope
/// i<[A, J_z]> with A = D^dag J_z D evaluated on exp(-i theta J_z)|psi>.
double squeezing_oracle(const StateVector& psi, double theta) {
    const auto ops = make_operators(psi.spin);
    const ComplexMatrix d = SpectralPropagator(ops.jx).unitary(0.5 * pi);
    const ComplexMatrix a = d.adjoint() * ops.jz * d;
    const ComplexVector phi = SpectralPropagator(ops.jz).apply(psi.amplitudes, theta);
    const double mean = phi.dot(a * phi).real();
    const double var = phi.dot(a * a * phi).real() - mean * mean;
    const double slope = (complex(0.0, 1.0) * phi.dot((ops.jz * a - a * ops.jz) * phi)).real();
    return psi.spin.twice() * var / (slope * slope);
}

/// Largest sum of squared block sizes over partitions of n into blocks of size <= k.
double max_block_square_sum(int n, int k) {
    std::function<double(int, int)> rec = [&](int left, int cap) -> double {
        if (left == 0) return 0.0;
        double best = -1.0;
        for (int b = std::min(cap, left); b >= 1; --b) best = std::max(best, b * b + rec(left - b, b));
        return best;
    };
    return rec(n, k);
}

int depth_by_enumeration(double fisher, int n) {
    // Smallest k whose best k-producible value reaches the observed I.
    for (int k = 1; k <= n; ++k)
        if (fisher <= max_block_square_sum(n, k) * (1.0 + 1e-8)) return k;
    return n;
}

}  // namespace

TEST(PeriodicDerivative, SpectralIsExactForBandLimitedSeries) {
    for (int n : {16, 17}) {
        RealVector f(n), df(n);
        for (int j = 0; j < n; ++j) {
            const double t = 2 * pi * j / n;
            f[j] = std::sin(3 * t) + 0.5 * std::cos(7 * t);
            df[j] = 3 * std::cos(3 * t) - 3.5 * std::sin(7 * t);
        }
        EXPECT_LT((PeriodicDerivative(n, Derivative::spectral).apply(f) - df).cwiseAbs().maxCoeff(), 1e-12) << n;
    }
}

TEST(PeriodicDerivative, CentralDifferenceIsSecondOrder) {
    std::vector<double> errors;
    for (int n : {40, 80, 160}) {
        RealVector f(n);
        for (int j = 0; j < n; ++j) f[j] = std::sin(2 * pi * j / n);
        errors.push_back(std::abs(PeriodicDerivative(n, Derivative::central).apply(f)[0] - 1.0));
    }
    EXPECT_NEAR(errors[0] / errors[1], 4.0, 0.05);
    EXPECT_NEAR(errors[1] / errors[2], 4.0, 0.05);
}

TEST(Moments, TrivialDistributions) {
    ReadoutGrid grid{2, theta_grid(2, 6), RealMatrix::Zero(3, 6), Provenance::direct};
    grid.p.row(1).setOnes();  // delta at n = 0
    EXPECT_EQ(moment(grid, 0, 1), 0.0);
    EXPECT_EQ(moment(grid, 0, 2), 0.0);
    grid.p.setConstant(1.0 / 3.0);
    EXPECT_NEAR(moment(grid, 2, 1), 0.0, 1e-15);
    EXPECT_NEAR(moment(grid, 2, 2), 2.0 / 3.0, 1e-15);
    EXPECT_THROW(moment(grid, 0, 3), std::invalid_argument);
}

TEST(Moments, CoherentStateVariance) {
    const auto grid = grid_of(css_x(16));
    EXPECT_NEAR(moment(grid, 0, 2), 4.0, 1e-9);
}

TEST(SpinSqueezing, CoherentStateSitsAtStandardLimit) {
    const auto grid = grid_of(css_x(16));
    for (int j = 0; j < grid.n_theta(); ++j) {
        if (std::abs(std::cos(grid.theta[j])) < 0.1) continue;
        EXPECT_NEAR(spin_squeezing(grid, j), 1.0, 1e-9) << j;
    }
}

TEST(SpinSqueezing, BareTwistedStateShowsNoSqueezing) {
    // The narrow axis of the bare state is tilted out of the measured plane.
    const auto grid = grid_of(one_axis_twisted_state(20, 0.05));
    for (int j = 0; j < grid.n_theta(); ++j) EXPECT_GT(spin_squeezing(grid, j), 1.0);
}

TEST(SpinSqueezing, TwistedStateIsSqueezed) {
    const auto psi = aligned_twisted_state(20, 0.05, TwistAlignment::squeezing);
    const auto grid = grid_of(psi);
    double best = infinity;
    for (int j = 0; j < grid.n_theta(); ++j) {
        const double xi2 = spin_squeezing(grid, j);
        best = std::min(best, xi2);
        if (std::isfinite(xi2)) EXPECT_NEAR(xi2, squeezing_oracle(psi, grid.theta[j]), 1e-8 * std::max(1.0, xi2));
    }
    EXPECT_LT(best, 1.0);
}

TEST(SpinSqueezing, GhzIsNotSqueezed) {
    const auto grid = grid_of(ghz(8));
    for (int j = 0; j < 3; ++j) EXPECT_GT(spin_squeezing(grid, j), 1e6);
}

TEST(FisherInformation, CoherentStateGivesN) {
    const auto grid = grid_of(css_x(16));
    for (int j = 0; j < grid.n_theta(); ++j) {
        if (std::abs(std::cos(grid.theta[j])) < 0.3) continue;
        EXPECT_NEAR(fisher_information(grid, j), 16.0, 1e-6 * 16) << j;
    }
}

TEST(FisherInformation, GhzReachesHeisenbergScaling) {
    const auto grid = grid_of(ghz(8));
    double best = 0.0;
    for (int j = 0; j < grid.n_theta(); ++j) best = std::max(best, fisher_information(grid, j));
    EXPECT_NEAR(best, 64.0, 1e-4 * 64);
}

TEST(FisherInformation, FlatGridCarriesNoInformation) {
    const auto grid = direct_grid(SymmetricDensityMatrix::maximally_mixed(6), 28);
    for (int j = 0; j < grid.n_theta(); ++j) EXPECT_NEAR(fisher_information(grid, j), 0.0, 1e-20);
}

TEST(FisherInformation, CentralDifferencesConvergeQuadratically) {
    const auto psi = one_axis_twisted_state(6, 0.2);
    const double theta = 2 * pi * 3 / 28;  // on every refined grid
    std::vector<double> errors;
    const double exact = fisher_information(grid_of(psi, 28 * 8), 3 * 8);
    for (int refine : {1, 2, 4}) {
        const auto grid = grid_of(psi, 28 * refine);
        ASSERT_NEAR(grid.theta[3 * refine], theta, 1e-14);
        errors.push_back(std::abs(fisher_information(grid, 3 * refine, Derivative::central) - exact));
    }
    EXPECT_NEAR(errors[0] / errors[1], 4.0, 0.6);
    EXPECT_NEAR(errors[1] / errors[2], 4.0, 0.3);
}

TEST(QfiOracle, Landmarks) {
    EXPECT_NEAR(qfi_oracle_pure(ghz(10)), 100.0, 1e-12);
    EXPECT_NEAR(qfi_oracle_pure(css_x(10)), 10.0, 1e-12);
    EXPECT_NEAR(qfi_oracle_pure(dicke_state(HalfInteger::from_twice(10), HalfInteger::from_int(2))), 0.0, 1e-14);
    std::mt19937_64 rng(2);
    const StateVector psi{HalfInteger::from_twice(7), testutil::random_state(8, rng)};
    EXPECT_NEAR(qfi_oracle_mixed(SymmetricDensityMatrix::pure(psi)), qfi_oracle_pure(psi), 1e-9);
}

TEST(QfiBound, GhzIsTight) {
    const auto grid = grid_of(ghz(8));
    const auto a = a_series_from_grid(grid, default_bound_tau(8));
    int checked = 0;
    for (int j = 0; j < grid.n_theta(); ++j) {
        if (std::abs(a[j]) > 0.999) continue;  // parity extremes: radial term is 0/0
        EXPECT_NEAR(qfi_bound(a, j), 64.0, 1e-3 * 64) << j;
        ++checked;
    }
    EXPECT_GT(checked, grid.n_theta() / 2);
}

TEST(QfiBound, MaximallyMixedGivesZero) {
    const auto grid = direct_grid(SymmetricDensityMatrix::maximally_mixed(8), 36);
    const auto a = a_series_from_grid(grid, default_bound_tau(8));
    for (int j = 0; j < grid.n_theta(); ++j) EXPECT_NEAR(qfi_bound(a, j), 0.0, 1e-10);
}

TEST(QfiBound, DegenerateCoherenceConvention) {
    EXPECT_EQ(qfi_bound_from(complex(1.0, 0.0), complex(0.0, 2.0)), 4.0);
    EXPECT_TRUE(std::isinf(qfi_bound_from(complex(1.0, 0.0), complex(0.5, 0.0))));
}

TEST(BellExtraction, GhzAtLargeN) {
    const auto grid = grid_of(ghz(64), 260);
    const auto out = extract_bell_correlator(grid, mixing_matrix(HalfInteger::from_twice(64)));
    ASSERT_TRUE(out.e.has_value());
    EXPECT_NEAR(*out.e, 0.25, 1e-8);
    EXPECT_NEAR(*out.q, 62.0, 1e-7);

    const auto spectrum = theta_spectrum(RealVector(grid.p.row(central_row(64)).transpose()));
    for (const auto& line : spectrum) {
        if (line.frequency == 0) continue;
        if (std::abs(line.frequency) == 64)
            EXPECT_GT(line.magnitude, 1e-2);
        else
            EXPECT_LT(line.magnitude, 1e-12) << line.frequency;
    }
}

TEST(BellExtraction, CoherentStateHasNoFastComponent) {
    const auto psi = css_x(64);
    const auto grid = grid_of(psi, 260);
    for (const auto& line : theta_spectrum(RealVector(grid.p.row(central_row(64)).transpose())))
        if (std::abs(line.frequency) == 64) EXPECT_LT(line.magnitude, 1e-12);
    // The element itself, 2^-N, gives E = 4^-N.
    const double e = extreme_element(SymmetricDensityMatrix::pure(psi));
    EXPECT_NEAR(e / std::pow(4.0, -64), 1.0, 0.1);
}

TEST(BellExtraction, TwistedStateAtQuarterPeriod) {
    const auto psi = aligned_twisted_state(8, 0.5 * pi, TwistAlignment::bell);
    const auto out = extract_bell_correlator(grid_of(psi), mixing_matrix(HalfInteger::from_twice(8)));
    EXPECT_NEAR(*out.e, 0.25, 1e-8);
    EXPECT_NEAR(*out.e, extreme_element(SymmetricDensityMatrix::pure(psi)), 1e-8);
}

TEST(BellExtraction, MatchesDensityMatrixElement) {
    std::mt19937_64 rng(61);
    for (int n : {3, 6, 10}) {
        for (int rank : {1, 2, 5}) {
            const SymmetricDensityMatrix rho(n, testutil::random_density(n + 1, rank, rng));
            const auto out = extract_bell_correlator(direct_grid(rho, default_theta_points(n)),
                                                     mixing_matrix(HalfInteger::from_twice(n)));
            EXPECT_NEAR(*out.e, extreme_element(rho), 1e-8) << n << " " << rank;
        }
    }
}

TEST(BellExtraction, ReportsImpossibleExtraction) {
    const auto grid = grid_of(ghz(4));
    const MixingMatrix trivial{HalfInteger::from_twice(4), ComplexMatrix::Identity(5, 5)};
    const auto out = extract_bell_correlator(grid, trivial);
    EXPECT_FALSE(out.e.has_value());
    EXPECT_FALSE(out.reason.empty());
    EXPECT_THROW(extract_bell_correlator(grid, mixing_matrix(HalfInteger::from_twice(5))), std::invalid_argument);
}

TEST(DepthBound, Landmarks) {
    EXPECT_EQ(depth_bound_from_fisher(8.0, 8), 1);
    EXPECT_EQ(depth_bound_from_fisher(64.0, 8), 8);
    EXPECT_EQ(depth_bound_from_fisher(30.0, 12), depth_by_enumeration(30.0, 12));
    EXPECT_EQ(depth_bound_from_fisher(30.0, 12), 3);
    EXPECT_THROW(depth_bound_from_fisher(-1.0, 4), std::invalid_argument);
    EXPECT_THROW(depth_bound_from_fisher(17.0, 4), std::invalid_argument);
}

TEST(DepthBound, AgreesWithExhaustivePartitionSearch) {
    for (int n = 1; n <= 12; ++n) {
        int previous = 1;
        for (int step = 0; step <= 200; ++step) {
            const double fisher = double(n) * n * step / 200.0;
            const int depth = depth_bound_from_fisher(fisher, n);
            EXPECT_EQ(depth, depth_by_enumeration(fisher, n)) << n << " " << fisher;
            EXPECT_GE(depth, previous);
            EXPECT_GE(depth, 1);
            EXPECT_LE(depth, n);
            previous = depth;
        }
    }
}

TEST(Certify, CoherentState) {
    const auto psi = css_x(16);
    const auto r = certify(grid_of(psi), qfi_oracle_pure(psi));
    EXPECT_NEAR(r.xi2, 1.0, 1e-9);
    EXPECT_NEAR(r.fisher, 16.0, 1e-5);
    EXPECT_EQ(r.depth_bound, 1);
    EXPECT_TRUE(r.hierarchy_ok);
    EXPECT_LE(r.qfi_bound, 16.0 + 1e-6);
}

TEST(Certify, Ghz) {
    const auto psi = ghz(8);
    const auto r = certify(grid_of(psi), qfi_oracle_pure(psi));
    EXPECT_TRUE(std::isinf(r.xi2));
    EXPECT_NEAR(r.fisher, 64.0, 1e-3);
    EXPECT_NEAR(r.qfi_bound, 64.0, 0.1);
    ASSERT_TRUE(r.bell.q.has_value());
    EXPECT_NEAR(*r.bell.q, 6.0, 1e-7);
    EXPECT_EQ(r.depth_bound, 8);
    EXPECT_TRUE(r.hierarchy_ok);
    EXPECT_NEAR(r.cramer_rao, 1.0 / r.qfi_bound, 1e-15);
}

TEST(Certify, MaximallyMixed) {
    const auto rho = SymmetricDensityMatrix::maximally_mixed(6);
    const auto r = certify(direct_grid(rho, 28), qfi_oracle_mixed(rho));
    EXPECT_NEAR(r.fisher, 0.0, 1e-20);
    EXPECT_TRUE(r.hierarchy_ok);
    // The extreme coherence is exactly zero; what is extracted is round-off.
    EXPECT_FALSE(r.bell.e.has_value());
    EXPECT_FALSE(r.bell.q.has_value());
    EXPECT_EQ(r.bell.reason, "E below numerical resolution");
    EXPECT_GT(r.bell.resolution, 0.0);
    EXPECT_LT(r.bell.resolution, 1e-20);
    EXPECT_TRUE(std::isinf(r.cramer_rao));
    EXPECT_EQ(r.depth_bound, 1);
}

TEST(Certify, TwistedStateIsSqueezed) {
    const auto psi = aligned_twisted_state(20, 0.05, TwistAlignment::squeezing);
    const auto r = certify(grid_of(psi), qfi_oracle_pure(psi));
    EXPECT_LT(r.xi2, 1.0);
    EXPECT_TRUE(r.hierarchy_ok);
    EXPECT_GE(r.depth_bound, 2);
}

TEST(Certify, HierarchyOnRandomTwistedStates) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> times(0.0, pi);
    for (int n : {4, 8, 16}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto psi = aligned_twisted_state(n, times(rng), TwistAlignment::squeezing);
            const auto grid = grid_of(psi);
            const double qfi = qfi_oracle_pure(psi);
            const auto r = certify(grid, qfi);
            const double squeezing_bound = std::isinf(r.xi2) ? 0.0 : n / r.xi2;
            EXPECT_LE(squeezing_bound, r.fisher + 1e-6) << n << " " << trial;
            EXPECT_LE(r.fisher, qfi + 1e-6) << n << " " << trial;
            const auto a = a_series_from_grid(grid, default_bound_tau(n));
            for (int j = 0; j < grid.n_theta(); ++j) EXPECT_LE(qfi_bound(a, j), qfi + 1e-6);
        }
    }
}

TEST(Certify, HierarchyOnRandomMixedStates) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const SymmetricDensityMatrix rho(7, testutil::random_density(8, 1 + trial % 4, rng));
        const auto grid = direct_grid(rho, 32);
        const double qfi = qfi_oracle_mixed(rho);
        const auto r = certify(grid, qfi);
        EXPECT_TRUE(r.hierarchy_ok);
        const auto a = a_series_from_grid(grid, default_bound_tau(7));
        for (int j = 0; j < grid.n_theta(); ++j) {
            EXPECT_LE(fisher_information(grid, j), qfi + 1e-6);
            EXPECT_LE(qfi_bound(a, j), qfi + 1e-6);
        }
    }
}
