#include <random>

#include <gtest/gtest.h>

#include <baflow/flow.hpp>
#include <baflow/models.hpp>

#include "support.hpp"

using namespace baflow;

namespace {

BAProblem symmetric_two_point(double beta_d) { return two_point_problem({0.5, beta_d}); }

BAProblem random_problem(std::uint64_t seed, Index n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 1.0), c(0.0, 3.0);
    Vec p(n);
    Mat d(n, n);
    for (Index i = 0; i < n; ++i) {
        p[i] = u(rng);
        for (Index j = 0; j < n; ++j) d(i, j) = c(rng);
    }
    return BAProblem(ProbVec::normalized(p), d, 1.0);
}

IntegratorConfig config(double dt, double t_max) {
    IntegratorConfig c;
    c.dt = dt;
    c.t_max = t_max;
    return c;
}

} // namespace

TEST(IntegratorConfig, Validation) {
    EXPECT_THROW(config(0.0, 1.0).validate(), ValidationError);
    EXPECT_THROW(config(0.1, 0.05).validate(), ValidationError);
    IntegratorConfig c = config(0.1, 1.0);
    c.sample_every = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_EQ(parse_method("euler"), Method::euler);
    EXPECT_THROW(parse_method("rk45"), ValidationError);
}

TEST(Integrate, FixedPointIsStationary) {
    const BAProblem prob = symmetric_two_point(2.0);
    const Trajectory tr = integrate_flow(prob, ProbVec::uniform(2), config(0.05, 5.0));
    for (std::size_t k = 0; k < tr.size(); ++k) EXPECT_LE(tr.residual_l1[k], 1e-12);
}

TEST(Integrate, ZeroBetaIsConstant) {
    const BAProblem prob = random_problem(1, 4).with_beta(0.0);
    const ProbVec q0(Vec{{0.1, 0.2, 0.3, 0.4}});
    const Trajectory tr = integrate_flow(prob, q0, config(0.1, 3.0));
    for (const auto& q : tr.states) EXPECT_LE((q.values() - q0.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Integrate, StaysOnSimplexAndFreeEnergyDecreases) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const BAProblem prob = random_problem(seed, 5);
        const Trajectory tr = integrate_flow(prob, ProbVec(Vec{{0.6, 0.1, 0.1, 0.1, 0.1}}), config(0.05, 20.0));
        for (const auto& q : tr.states) {
            EXPECT_NEAR(q.values().sum(), 1.0, 1e-12);
            EXPECT_GT(q.values().minCoeff(), 0.0);
        }
        EXPECT_FALSE(tr.lyapunov_violation);
        for (std::size_t k = 1; k < tr.size(); ++k)
            EXPECT_LE(tr.free_energy[k] - tr.free_energy[k - 1], 10.0 * 0.05 * 0.05);
    }
}

TEST(Integrate, SamplingAndReference) {
    const BAProblem prob = symmetric_two_point(2.0);
    IntegratorConfig c = config(0.01, 1.0);
    c.sample_every = 10;
    const Trajectory tr = integrate_flow(prob, ProbVec(Vec{{0.9, 0.1}}), c, ProbVec::uniform(2));
    ASSERT_EQ(tr.size(), 11u);
    EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
    EXPECT_TRUE(tr.has_ref());
    EXPECT_NEAR(tr.dist_to_ref_l1.front(), 0.8, 1e-15);
    for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_GT(tr.times[k], tr.times[k - 1]);
}

TEST(Integrate, EulerAndRk4Agree) {
    const BAProblem prob = random_problem(3, 4);
    const ProbVec q0(Vec{{0.7, 0.1, 0.1, 0.1}});
    IntegratorConfig e = config(1e-4, 1.0);
    e.method = Method::euler;
    const Trajectory a = integrate_flow(prob, q0, e);
    const Trajectory b = integrate_flow(prob, q0, config(0.01, 1.0));
    EXPECT_LE((a.states.back().values() - b.states.back().values()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Integrate, FloorViolationNamesTheStep) {
    const BAProblem prob = symmetric_two_point(8.0);
    IntegratorConfig c = config(0.5, 2.0);
    c.positivity_floor = 0.2;
    c.max_halvings = 1;
    try {
        integrate_flow(prob, ProbVec(Vec{{0.9, 0.1}}), c);
        FAIL() << "expected a NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
    }
}

TEST(FixedPoint, Examples) {
    const FixedPointResult s = ba_fixed_point(symmetric_two_point(2.0), ProbVec(Vec{{0.6, 0.4}}), 1e-12);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.q[0], 0.5, 1e-12);

    const ProbVec q0(Vec{{0.2, 0.3, 0.5}});
    const FixedPointResult z = ba_fixed_point(random_problem(4, 3).with_beta(0.0), q0);
    EXPECT_EQ(z.iterations, 0);
    EXPECT_EQ(z.q.values(), q0.values());
}

TEST(FixedPoint, AsymmetricTwoPointSolvesScalarEquation) {
    const TwoPointSpec s{0.7, 2.0};
    const FixedPointResult fp = ba_fixed_point(two_point_problem(s), ProbVec::uniform(2), 1e-13);
    ASSERT_TRUE(fp.converged);
    EXPECT_LE(std::abs(two_point_fixed_point_residual(s, fp.q[0])), 1e-10);
    EXPECT_NEAR(fp.q[0], two_point_theta(s), 1e-10);
}

TEST(FixedPoint, ReportsNonConvergence) {
    const FixedPointResult fp = ba_fixed_point(random_problem(5, 4), ProbVec(Vec{{0.7, 0.1, 0.1, 0.1}}), 1e-14, 3);
    EXPECT_FALSE(fp.converged);
    EXPECT_GT(fp.residual, 1e-14);
    EXPECT_THROW(ba_fixed_point(random_problem(5, 4), ProbVec::uniform(4), 0.0), ValidationError);
}

TEST(FixedPoint, BoundaryLimitHitsFloor) {
    // alpha close to 1 with small beta_d: the fixed point sits on the boundary
    const TwoPointSpec s{0.95, 0.5};
    ASSERT_FALSE(two_point_has_interior_fixed_point(s));
    EXPECT_THROW(ba_fixed_point(two_point_problem(s), ProbVec::uniform(2), 1e-12, 100000000), NumericalError);
}

TEST(Dissipation, ConstantTrajectoryHasZeroError) {
    const BAProblem prob = symmetric_two_point(2.0);
    const Trajectory tr = integrate_flow(prob, ProbVec::uniform(2), config(0.1, 1.0));
    EXPECT_LE(verify_dissipation(prob, tr).max_abs_err, 1e-30);
}

TEST(Dissipation, SecondOrderInStepSize) {
    const BAProblem prob = symmetric_two_point(2.0);
    const ProbVec q0(Vec{{0.9, 0.1}});
    const double e1 = verify_dissipation(prob, integrate_flow(prob, q0, config(1e-3, 2.0))).max_abs_err;
    const double e2 = verify_dissipation(prob, integrate_flow(prob, q0, config(5e-4, 2.0))).max_abs_err;
    EXPECT_LE(e1, 1e-5);
    EXPECT_GE(e1 / e2, 3.5);

    const BAProblem r = random_problem(6, 5);
    const ProbVec q5(Vec{{0.4, 0.3, 0.1, 0.1, 0.1}});
    const double f1 = verify_dissipation(r, integrate_flow(r, q5, config(1e-2, 2.0))).max_abs_err;
    const double f2 = verify_dissipation(r, integrate_flow(r, q5, config(5e-3, 2.0))).max_abs_err;
    EXPECT_NEAR(f1 / f2, 4.0, 0.5);
}

TEST(Dissipation, NeedsThreeSamples) {
    const BAProblem prob = symmetric_two_point(2.0);
    const Trajectory tr = integrate_flow(prob, ProbVec::uniform(2), config(0.1, 0.1));
    EXPECT_THROW(verify_dissipation(prob, tr), ValidationError);
}

TEST(DecayFit, SymmetricTwoPointRate) {
    const BAProblem prob = symmetric_two_point(2.0);
    const Trajectory tr = integrate_flow(prob, ProbVec(Vec{{0.9, 0.1}}), config(0.05, 30.0), ProbVec::uniform(2));
    const DecayFit f = fit_decay_rate(tr, ProbVec::uniform(2), 0.3);
    const double t2 = std::pow(std::tanh(1.0), 2);
    EXPECT_NEAR(f.rate, t2, 0.1 * t2);
    EXPECT_GT(f.r_squared, 0.999);
    EXPECT_TRUE(f.monotone_tail);
}

TEST(DecayFit, RejectsNoiseFloor) {
    const BAProblem prob = symmetric_two_point(2.0);
    const Trajectory tr = integrate_flow(prob, ProbVec::uniform(2), config(0.05, 5.0));
    EXPECT_THROW(fit_decay_rate(tr, ProbVec::uniform(2), 0.3), NumericalError);
}

TEST(DecayFit, FlagsNonMonotoneTail) {
    std::vector<double> t, d;
    for (int i = 0; i < 20; ++i) {
        t.push_back(i);
        d.push_back(std::exp(-0.5 * i) * (i % 2 ? 3.0 : 1.0));
    }
    EXPECT_FALSE(fit_decay_rate(t, d, 0.5).monotone_tail);
    EXPECT_THROW(fit_decay_rate(t, d, 1.0), ValidationError);
}

TEST(EntryTime, Examples) {
    const BAProblem prob = symmetric_two_point(2.0);
    const double f_star = free_energy(prob, ProbVec::uniform(2));

    const Trajectory at_fp = integrate_flow(prob, ProbVec::uniform(2), config(0.05, 1.0));
    const EntryTimeReport a = entry_time_report(prob, at_fp, 0.01, f_star);
    ASSERT_TRUE(a.t_entry.has_value());
    EXPECT_EQ(*a.t_entry, 0.0);

    const Trajectory tr = integrate_flow(prob, ProbVec(Vec{{0.99, 0.01}}), config(0.01, 30.0));
    const EntryTimeReport b = entry_time_report(prob, tr, 0.05, f_star);
    ASSERT_TRUE(b.t_entry.has_value());
    EXPECT_LE(*b.t_entry, b.bound);
    EXPECT_TRUE(b.holds);

    const EntryTimeReport c = entry_time_report(prob, tr, 10.0, f_star);
    EXPECT_EQ(*c.t_entry, 0.0);
    EXPECT_THROW(entry_time_report(prob, tr, 0.0, f_star), ValidationError);
}

TEST(ResidualDistance, ComparableNearFixedPoint) {
    const BAProblem prob = test_support::interior_problem(7, 4, 1.0);
    const FixedPointResult fp = ba_fixed_point(prob, ProbVec::uniform(4), 1e-14);
    ASSERT_TRUE(fp.converged);
    const Trajectory tr = integrate_flow(prob, ProbVec(Vec{{0.4, 0.3, 0.2, 0.1}}), config(0.05, 40.0), fp.q);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double d = tr.dist_to_ref_l1[k];
        if (d > 0.05 || d < 1e-9) continue;
        lo = std::min(lo, tr.residual_l1[k] / d);
        hi = std::max(hi, tr.residual_l1[k] / d);
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 10.0);
}
