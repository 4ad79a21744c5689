#include <gtest/gtest.h>

#include <baflow/models.hpp>

using namespace baflow;

TEST(TwoPoint, SymmetricFixedPoint) {
    const BAProblem prob = two_point_problem({0.5, 1.3});
    EXPECT_LE(dual_identity_residual(prob, ProbVec::uniform(2)), 1e-15);
    EXPECT_NEAR(two_point_theta({0.5, 1.3}), 0.5, 1e-14);
    EXPECT_THROW(two_point_problem({1.0, 1.0}), ValidationError);
    EXPECT_THROW(two_point_problem({0.5, 0.0}), ValidationError);
}

TEST(TwoPoint, ScalarEquationAtSolverOutput) {
    const TwoPointSpec s{0.7, 2.0};
    const FixedPointResult fp = ba_fixed_point(two_point_problem(s), ProbVec::uniform(2), 1e-13);
    ASSERT_TRUE(fp.converged);
    EXPECT_LE(std::abs(two_point_fixed_point_residual(s, fp.q[0])), 1e-10);
    EXPECT_NEAR(two_point_map(s, fp.q[0]), ba_map(two_point_problem(s), fp.q)[0], 1e-15);
    // the displayed scalar equation is not satisfied, even at the symmetric point
    EXPECT_GT(std::abs(two_point_displayed_equation_residual(s, fp.q[0])), 1e-3);
    EXPECT_GT(std::abs(two_point_displayed_equation_residual({0.5, 2.0}, 0.5)), 1e-3);
}

TEST(TwoPoint, HighTemperatureNearlyFixed) {
    const ProbVec q(Vec{{0.8, 0.2}});
    const double r1 = residual_l1(two_point_problem({0.6, 1e-2}), q);
    const double r2 = residual_l1(two_point_problem({0.6, 1e-3}), q);
    EXPECT_LT(r1, 1e-2);
    EXPECT_NEAR(r1 / r2, 10.0, 0.2);
}

TEST(TwoPoint, InteriorCondition) {
    EXPECT_TRUE(two_point_has_interior_fixed_point({0.5, 0.1}));
    EXPECT_FALSE(two_point_has_interior_fixed_point({0.95, 0.5}));
    EXPECT_THROW(two_point_theta({0.95, 0.5}), ValidationError);
}

TEST(TwoPoint, ClosedFormSymmetric) {
    for (double bd : {0.5, 1.0, 2.0, 4.0}) {
        const double t = std::tanh(0.5 * bd);
        EXPECT_NEAR(two_point_gap_closed_form({0.5, bd}, 0.5), 0.5 * t * t, 1e-15);
        EXPECT_NEAR(two_point_symmetric_gap(bd), 0.5 * t * t, 1e-15);
        const double gram = tangent_spectrum(gram_kernel(two_point_problem({0.5, bd}), ProbVec::uniform(2))).gap;
        EXPECT_NEAR(gram, 0.5 * t * t, 1e-12);
    }
    EXPECT_NEAR(two_point_symmetric_gap(2.0), 0.290013, 1e-6);
    EXPECT_NEAR(two_point_symmetric_gap(0.1) / (0.01 / 8.0), 1.0, 2e-3);
}

TEST(TwoPoint, GapRow) {
    const TwoPointGapRow r = two_point_gap_row({0.5, 2.0});
    EXPECT_TRUE(r.interior);
    EXPECT_NEAR(r.theta, 0.5, 1e-12);
    EXPECT_NEAR(r.lambda_pipeline, r.lambda_closed_form, 1e-12);
    EXPECT_NEAR(r.relaxation_rate, 2.0 * r.lambda_pipeline, 1e-8);
    const TwoPointGapRow b = two_point_gap_row({0.95, 0.5});
    EXPECT_FALSE(b.interior);
    EXPECT_TRUE(std::isnan(b.lambda_pipeline));
}

TEST(TwoPoint, GapSurfaceIsDeterministicAcrossJobCounts) {
    const std::vector<double> alphas{0.3, 0.5, 0.7}, bds{1.0, 2.0, 3.0};
    const auto a = two_point_gap_surface(alphas, bds, 1);
    const auto b = two_point_gap_surface(alphas, bds, 3);
    ASSERT_EQ(a.size(), 9u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].alpha, alphas[i / 3]);
        EXPECT_EQ(a[i].beta_d, bds[i % 3]);
        EXPECT_EQ(a[i].lambda_pipeline, b[i].lambda_pipeline);
        EXPECT_EQ(a[i].theta, b[i].theta);
    }
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(8, 3,
                              [](std::size_t i) {
                                  if (i == 5) throw NumericalError("boom");
                              }),
                 NumericalError);
}

TEST(ThreeCluster, ProblemShape) {
    const ThreeClusterSpec s;
    const BAProblem prob = three_cluster_problem(s);
    EXPECT_EQ(prob.source_dim(), 3);
    EXPECT_EQ(prob.dim(), 15);
    EXPECT_EQ(prob.cost()(0, 4), 0.0);
    EXPECT_EQ(prob.cost()(0, 5), 3.0);
    EXPECT_EQ(prob.cost()(2, 14), 0.0);
    EXPECT_THROW(three_cluster_problem({2, 3.0, 2.0}), ValidationError);
}

TEST(ThreeCluster, UniformIsFixedForUniformSource) {
    const ThreeClusterSpec s;
    EXPECT_LE(dual_identity_residual(three_cluster_problem(s), ProbVec::uniform(15)), 1e-12);
}

TEST(ThreeCluster, FixedPointContinuum) {
    const ThreeClusterSpec s;
    const BAProblem prob = three_cluster_problem(s);
    const Vec masses = Vec::Constant(3, 1.0 / 3.0);
    for (int k = 0; k < 3; ++k) {
        Vec shape(15);
        for (int i = 0; i < 15; ++i) shape[i] = 1.0 + 0.5 * std::sin(0.9 * i + k);
        const ProbVec q = cluster_state(s, masses, shape);
        EXPECT_LE(dual_identity_residual(prob, q), 1e-12);
        EXPECT_LE((cluster_masses(s, q) - masses).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(ThreeCluster, SymmetricMassesForEveryClusterSize) {
    for (int m : {3, 5, 8}) {
        const ThreeClusterSpec s{m, 3.0, 2.0};
        const FixedPointResult fp = ba_fixed_point(three_cluster_problem(s), uniform_perturbed(3 * m), 1e-13);
        ASSERT_TRUE(fp.converged);
        EXPECT_LE((cluster_masses(s, fp.q).array() - 1.0 / 3.0).abs().maxCoeff(), 1e-12);
    }
}

TEST(ThreeCluster, ZeroModesAndNullVectors) {
    for (int m : {3, 5, 8}) {
        const ThreeClusterSpec s{m, 3.0, 2.0};
        const ThreeClusterReduced r = three_cluster_reduced(s, ProbVec::uniform(3 * m));
        EXPECT_EQ(r.zero_modes, 3 * (m - 1));
    }
}

TEST(ThreeCluster, KernelEntriesMatchGibbsState) {
    ThreeClusterSpec s;
    s.source_weights = {0.5, 0.3, 0.2};
    const BAProblem prob = three_cluster_problem(s);
    const FixedPointResult fp = ba_fixed_point(prob, ProbVec::uniform(15), 1e-13);
    ASSERT_TRUE(fp.converged);
    const Vec pi = cluster_masses(s, fp.q);
    const GibbsState g = gibbs_state(prob, fp.q);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) {
            if (j == k) continue;
            const auto e = three_cluster_kernel_entries(s, pi, k, j);
            EXPECT_NEAR(g.kernels(k, k * s.m), e[0], 1e-12);
            EXPECT_NEAR(g.kernels(k, j * s.m + 1), e[1], 1e-12);
        }
}

TEST(ThreeCluster, ReducedGapNormalisations) {
    double mass_ref = 0.0;
    for (int m : {3, 5, 8}) {
        const ThreeClusterSpec s{m, 3.0, 2.0};
        const ThreeClusterReduced r = three_cluster_reduced(s, ProbVec::uniform(3 * m));
        if (m == 3) mass_ref = r.reduced_gap_mass;
        EXPECT_NEAR(r.reduced_gap_mass, mass_ref, 1e-12);
        EXPECT_NEAR(r.reduced_gap_perentry * m, mass_ref, 1e-12);
    }
}

TEST(ThreeCluster, MassDynamicsSpectrumMatchesReducedGram) {
    ThreeClusterSpec s;
    s.source_weights = {0.5, 0.3, 0.2};
    const FixedPointResult fp = ba_fixed_point(three_cluster_problem(s), ProbVec::uniform(15), 1e-13);
    ASSERT_TRUE(fp.converged);
    const ThreeClusterReduced r = three_cluster_reduced(s, fp.q);
    EXPECT_LE((r.mass_relaxation_fd - r.mass_relaxation_gram).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((r.reduced_gram.rowwise().sum() - cluster_masses(s, fp.q)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ThreeCluster, GapScalesWithContrastSquared) {
    // symmetric masses: the mass-coordinate gap is (1 - e)^2 / (3 (1 + 2e)^2) with e = e^{-beta delta}
    for (double bd = 1.0; bd <= 8.0; bd += 0.5) {
        const ThreeClusterSpec s{5, bd, 1.0};
        const double gap = three_cluster_reduced(s, ProbVec::uniform(15)).reduced_gap_mass;
        const double e = std::exp(-bd);
        EXPECT_NEAR(gap, (1.0 - e) * (1.0 - e) / (3.0 * (1.0 + 2.0 * e) * (1.0 + 2.0 * e)), 1e-12);
        // (1 - e)^2 / 3 is the leading behaviour; within 2% once 4e <= 0.02
        if (bd >= 5.5) {
            EXPECT_NEAR(gap / ((1.0 - e) * (1.0 - e) / 3.0), 1.0, 0.02);
        }
    }
}

TEST(TwoScale, SymmetricSourceAtEquilibriumIsDegenerate) {
    const ThreeClusterSpec s;
    IntegratorConfig c;
    c.t_max = 2.0;
    const TwoScaleResult r = two_scale_experiment(s, ProbVec::uniform(15), c);
    EXPECT_TRUE(r.degenerate);
    EXPECT_FALSE(r.has_plateau);
}

TEST(TwoScale, AsymmetricRunRates) {
    ThreeClusterSpec s;
    s.source_weights = {0.5, 0.3, 0.2};
    IntegratorConfig c;
    c.t_max = 25.0;
    const TwoScaleResult r = two_scale_experiment(s, uniform_perturbed(15), c);
    EXPECT_FALSE(r.degenerate);
    EXPECT_GE(r.fit.rate, r.bound_rate);
    EXPECT_NEAR(r.fit.rate / r.fd_min_rate, 1.0, 0.1);
    EXPECT_DOUBLE_EQ(r.bound_rate, r.lambda_star / 4.0);
}
