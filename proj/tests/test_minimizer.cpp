#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "repel/minimizer.hpp"

namespace repel {
namespace {

TEST(ProjectToSimplex, Examples) {
    const std::vector<double> a{0.2, 0.3, 0.5};
    EXPECT_EQ(project_to_simplex(a), a);
    const auto b = project_to_simplex(std::vector<double>{2.0, 0.0});
    EXPECT_DOUBLE_EQ(b[0], 1.0);
    EXPECT_DOUBLE_EQ(b[1], 0.0);
    const auto c = project_to_simplex(std::vector<double>{0.0, 0.0, 0.0, 0.0});
    for (double v : c) EXPECT_DOUBLE_EQ(v, 0.25);
    const auto d = project_to_simplex(std::vector<double>{1.0, 0.5, -3.0});
    EXPECT_DOUBLE_EQ(d[0], 0.75);
    EXPECT_DOUBLE_EQ(d[1], 0.25);
    EXPECT_DOUBLE_EQ(d[2], 0.0);
}

TEST(SimplexKkt, ZeroAtOptimumPositiveElsewhere) {
    EXPECT_DOUBLE_EQ(simplex_kkt_residual(std::vector<double>{0.5, 0.5}, std::vector<double>{2.0, 2.0}), 0.0);
    EXPECT_GT(simplex_kkt_residual(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 2.0}), 0.0);
    // A zero-mass coordinate with a lower potential violates complementarity.
    EXPECT_DOUBLE_EQ(simplex_kkt_residual(std::vector<double>{1.0, 0.0}, std::vector<double>{2.0, 1.5}), 0.5);
    EXPECT_DOUBLE_EQ(simplex_kkt_residual(std::vector<double>{1.0, 0.0}, std::vector<double>{2.0, 3.0}), 0.0);
}

TEST(MinimizeRepulsion, CantorClosedForm) {
    for (int n = 0; n <= 5; ++n) {
        const GenerationalSet k = build_cantor(n);
        const MinimizationResult res = minimize_repulsion(k, RepulsionSchedule::cantor(n));
        const double expected = 1.0 + 0.75 * n;
        EXPECT_NEAR(res.min_value, expected, 1e-8 * expected) << n;
        const double leaf = std::pow(4.0, -n);
        for (std::size_t i = 0; i < k.leaf_count(); ++i) ASSERT_NEAR(res.minimizer[i], leaf, 1e-8 * leaf);
        EXPECT_FALSE(res.used_projected_gradient);
        EXPECT_EQ(res.active_bound_count, 0u);
        EXPECT_TRUE(verify_equidistribution(res, k, 1e-8).passed);
    }
}

TEST(MinimizeRepulsion, SocialistTwoThree) {
    const GenerationalSet s = build_socialist(BranchingProfile({2, 3}));
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const auto sched = oracle::random_schedule(2, rng);
        const MinimizationResult res = minimize_repulsion(s, sched);
        for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(res.minimizer[i], 1.0 / 6.0, 1e-12);
        const EquidistributionReport eq = verify_equidistribution(res, s, 1e-10);
        EXPECT_TRUE(eq.passed);
        EXPECT_LE(eq.worst_ratio, 1.0 + 1e-10);
    }
}

TEST(MinimizeRepulsion, SingleLeaf) {
    const MinimizationResult res = minimize_repulsion(build_cantor(0), RepulsionSchedule({3.0}));
    EXPECT_DOUBLE_EQ(res.minimizer[0], 1.0);
    EXPECT_DOUBLE_EQ(res.min_value, 3.0);
}

TEST(MinimizeRepulsion, AgreesWithDenseOracle) {
    std::mt19937_64 rng(12);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const int n = 1 + static_cast<int>(seed % 4);
        const GenerationalSet s = build_random_filtration(n, 4, seed);
        const auto sched = oracle::random_schedule(n, rng);
        const MinimizationResult res = minimize_repulsion(s, sched);
        const std::vector<double> ref = oracle::affine_minimizer(s, sched);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            EXPECT_GT(ref[i], 0.0);
            EXPECT_NEAR(res.minimizer[i], ref[i], 1e-10) << seed;
        }
        EXPECT_NEAR(res.min_value, oracle::repulsion(s, sched, ref), 1e-12 * res.min_value);
        EXPECT_LE(res.kkt_residual, 1e-9 * std::max(1.0, res.min_value));
        EXPECT_TRUE(verify_nondegeneracy(res, 1e-12).passed);
    }
}

TEST(MinimizeRepulsion, NoMeasureDoesBetter) {
    std::mt19937_64 rng(71);
    const GenerationalSet s = build_random_filtration(3, 3, 5);
    const auto sched = oracle::random_schedule(3, rng);
    const MinimizationResult res = minimize_repulsion(s, sched);
    for (int trial = 0; trial < 200; ++trial) {
        const LeafMeasure mu = oracle::random_measure(s.leaf_count(), rng, 0.3);
        EXPECT_GE(repulsion_hierarchical(s, sched, mu), res.min_value * (1.0 - 1e-12));
    }
}

TEST(BruteForce, CantorOne) {
    const GenerationalSet k1 = build_cantor(1);
    const MinimizationResult brute = brute_force_minimize(k1, RepulsionSchedule::cantor(1), 50);
    EXPECT_NEAR(brute.min_value, 1.75, 0.02 * 1.75);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(brute.minimizer[i], 0.25, 0.01);
}

TEST(BruteForce, BinarySplitIsHalfHalf) {
    const GenerationalSet s = build_socialist(BranchingProfile({2}));
    const MinimizationResult brute = brute_force_minimize(s, RepulsionSchedule({1.0, 2.0}), 50);
    EXPECT_NEAR(brute.minimizer[0], 0.5, 1e-12);
    EXPECT_NEAR(brute.minimizer[1], 0.5, 1e-12);
    EXPECT_NEAR(brute.min_value, 1.5, 1e-12);
}

TEST(BruteForce, AgreesWithMinimizerOnSmallTrees) {
    std::mt19937_64 rng(18);
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 10 && seed < 500; ++seed) {
        const GenerationalSet s = build_random_filtration(2, 3, seed);
        if (s.leaf_count() > 6 || s.leaf_count() < 2) continue;
        ++checked;
        const auto sched = oracle::random_schedule(2, rng);
        const MinimizationResult fast = minimize_repulsion(s, sched);
        const MinimizationResult brute = brute_force_minimize(s, sched, 20);
        EXPECT_NEAR(brute.min_value, fast.min_value, 1e-9 * fast.min_value);
        for (std::size_t i = 0; i < s.leaf_count(); ++i) EXPECT_NEAR(brute.minimizer[i], fast.minimizer[i], 1e-5);
    }
    EXPECT_EQ(checked, 10);
}

TEST(BruteForce, Limits) {
    EXPECT_THROW(brute_force_minimize(build_cantor(2), RepulsionSchedule::cantor(2), 10), DomainError);
    EXPECT_THROW(brute_force_minimize(build_cantor(1), RepulsionSchedule::cantor(1), 0), DomainError);
}

TEST(ProjectedGradient, ReachesBoundaryMinimizer) {
    // G = [[1,2],[2,5]] is positive definite but its simplex minimizer is the vertex (1, 0).
    const auto apply = [](std::span<const double> in, std::span<double> out) {
        out[0] = in[0] + 2.0 * in[1];
        out[1] = 2.0 * in[0] + 5.0 * in[1];
    };
    const ProjectedGradientOutcome pg = simplex_projected_gradient(apply, {0.5, 0.5}, 7.0, 1e-12, 10000);
    ASSERT_TRUE(pg.converged);
    EXPECT_DOUBLE_EQ(pg.x[0], 1.0);
    EXPECT_DOUBLE_EQ(pg.x[1], 0.0);
    EXPECT_LE(pg.kkt_residual, 1e-12);
}

TEST(MinimizeRepulsion, ConvergenceErrorCarriesBestIterate) {
    const GenerationalSet s = build_random_filtration(3, 4, 9);
    std::mt19937_64 rng(2);
    const auto sched = oracle::random_schedule(3, rng);
    MinimizerOptions opts;
    opts.kkt_tolerance = 0.0;
    opts.max_iterations = 3;
    opts.cg_tolerance = 1e-3;
    try {
        (void)minimize_repulsion(s, sched, opts);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_TRUE(e.best.used_projected_gradient);
        EXPECT_NEAR(pairwise_sum(e.best.minimizer.masses()), 1.0, 1e-12);
        EXPECT_GT(e.best.kkt_residual, 0.0);
    }
}

TEST(MinimizeRepulsion, ScheduleMismatch) {
    EXPECT_THROW(minimize_repulsion(build_cantor(2), RepulsionSchedule::cantor(1)), DomainError);
}

TEST(Verifiers, Equidistribution) {
    const GenerationalSet k1 = build_cantor(1);
    const EquidistributionReport bad = verify_equidistribution(LeafMeasure({0.4, 0.2, 0.2, 0.2}), k1, 1e-6);
    EXPECT_FALSE(bad.passed);
    EXPECT_EQ(bad.worst_generation, 1);
    EXPECT_DOUBLE_EQ(bad.worst_ratio, 2.0);
    EXPECT_EQ(bad.heaviest_node, 1);
    EXPECT_TRUE(verify_equidistribution(LeafMeasure::equidistributed(4), k1, 0.0).passed);
}

TEST(Verifiers, NonSocialistSetRejected) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const GenerationalSet s = build_random_filtration(3, 4, seed);
        if (s.is_socialist()) continue;
        EXPECT_THROW(verify_equidistribution(LeafMeasure::equidistributed(s.leaf_count()), s, 1e-6), DomainError);
        return;
    }
    FAIL() << "no non-socialist draw";
}

TEST(BruteForce, ProfileTwoTwoMatchesMinimizer) {
    const GenerationalSet s = build_socialist(BranchingProfile({2, 2}));
    const RepulsionSchedule sched({0.5, 1.5, 4.0});
    const MinimizationResult brute = brute_force_minimize(s, sched, 40);
    const MinimizationResult fast = minimize_repulsion(s, sched);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(brute.minimizer[i], fast.minimizer[i], 1.0 / 40);
    EXPECT_NEAR(brute.min_value, fast.min_value, 1e-9);
}

TEST(Verifiers, CantorThreeAndFourMinimizers) {
    const GenerationalSet k3 = build_cantor(3);
    const MinimizationResult r3 = minimize_repulsion(k3, RepulsionSchedule::cantor(3));
    EXPECT_TRUE(verify_equidistribution(r3, k3, 1e-6).passed);
    const GenerationalSet k4 = build_cantor(4);
    const MinimizationResult r4 = minimize_repulsion(k4, RepulsionSchedule::cantor(4));
    const NondegeneracyReport nd = verify_nondegeneracy(r4, 1e-10);
    EXPECT_TRUE(nd.passed);
    EXPECT_NEAR(nd.min_mass, 1.0 / 256.0, 1e-12);
}

TEST(Verifiers, SingleNodeIsVacuouslyEquidistributed) {
    const EquidistributionReport rep = verify_equidistribution(LeafMeasure({1.0}), build_cantor(0), 0.0);
    EXPECT_TRUE(rep.passed);
}

TEST(Verifiers, RandomFiltrationMinimizersArePositive) {
    std::mt19937_64 rng(248);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GenerationalSet s = build_random_filtration(3, 4, seed);
        const MinimizationResult res = minimize_repulsion(s, oracle::random_schedule(3, rng));
        EXPECT_TRUE(verify_nondegeneracy(res, 1e-12).passed) << seed;
    }
}

TEST(Verifiers, Nondegeneracy) {
    const NondegeneracyReport rep = verify_nondegeneracy(LeafMeasure({0.5, 0.0, 0.5}), 1e-12);
    EXPECT_FALSE(rep.passed);
    EXPECT_EQ(rep.lightest_leaf, 1u);
    EXPECT_TRUE(verify_nondegeneracy(LeafMeasure({0.5, 0.5}), 1e-12).passed);
}

}  // namespace
}  // namespace repel
