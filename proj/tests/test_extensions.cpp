#include <random>

#include <gtest/gtest.h>

#include <baflow/extensions.hpp>

using namespace baflow;

TEST(WaterFilling, Examples) {
    const WaterFilling a = water_filling({{1.0, 1.0}, 2.0, 1.0});
    EXPECT_NEAR(a.powers[0], 1.0, 1e-15);
    EXPECT_NEAR(a.powers[1], 1.0, 1e-15);

    const WaterFilling b = water_filling({{1.0, 0.5}, 3.0, 1.0});
    EXPECT_NEAR(b.level, 3.0, 1e-15);
    EXPECT_NEAR(b.powers[0], 2.0, 1e-15);
    EXPECT_NEAR(b.powers[1], 1.0, 1e-15);

    const WaterFilling c = water_filling({{0.3, 2.0, 0.9}, 1e-6, 1.0});
    EXPECT_EQ(c.active, 1u);
    EXPECT_NEAR(c.powers[1], 1e-6, 1e-15);
    EXPECT_EQ(c.powers[0], 0.0);
    EXPECT_EQ(c.powers[2], 0.0);
}

TEST(WaterFilling, Validation) {
    EXPECT_THROW(water_filling({{}, 1.0, 1.0}), ValidationError);
    EXPECT_THROW(water_filling({{1.0, -1.0}, 1.0, 1.0}), ValidationError);
    EXPECT_THROW(water_filling({{1.0}, 0.0, 1.0}), ValidationError);
}

TEST(WaterFilling, KktOnRandomInstances) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> g(0.01, 5.0), p(0.001, 20.0);
    for (int k = 0; k < 500; ++k) {
        MimoSpec s;
        for (int i = 0; i < 1 + k % 8; ++i) s.channel_gains.push_back(g(rng));
        s.total_power = p(rng);
        const WaterFilling w = water_filling(s);
        double tot = 0.0;
        for (std::size_t i = 0; i < w.powers.size(); ++i) {
            const double inv = 1.0 / s.channel_gains[i];
            tot += w.powers[i];
            if (w.powers[i] > 0.0) EXPECT_NEAR(w.level - inv, w.powers[i], 1e-12);
            else EXPECT_LE(w.level, inv + 1e-12);
        }
        EXPECT_NEAR(tot, s.total_power, 1e-12 * std::max(1.0, s.total_power));
    }
}

TEST(MimoGaps, Examples) {
    const MimoSpec a{{1.0, 1.0}, 2.0, 1.0};
    const DirectionGaps ga = mimo_direction_gaps(a, water_filling(a).powers);
    EXPECT_NEAR(ga.per_direction[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(ga.per_direction[1], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(ga.stiffness_ratio, 1.0, 1e-15);

    const MimoSpec b{{1.0, 0.5}, 3.0, 1.0};
    const DirectionGaps gb = mimo_direction_gaps(b, water_filling(b).powers);
    EXPECT_NEAR(gb.per_direction[0], 0.2, 1e-15);
    EXPECT_NEAR(gb.per_direction[1], 0.5, 1e-15);
    EXPECT_NEAR(gb.system_gap, 0.2, 1e-15);
    EXPECT_NEAR(gb.stiffness_ratio, 2.5, 1e-14);

    const DirectionGaps tb = mimo_direction_gaps(b, water_filling(b).powers, MimoGapVariant::text);
    EXPECT_NEAR(tb.per_direction[0], 0.25, 1e-15);
    EXPECT_NEAR(tb.per_direction[1], 1.0, 1e-15);
}

TEST(MimoGaps, DoublingBetaDoublesPowerTerm) {
    const MimoSpec s{{1.3, 0.4, 0.8}, 4.0, 1.0};
    MimoSpec s2 = s;
    s2.beta = 2.0;
    const auto w = water_filling(s).powers;
    const DirectionGaps a = mimo_direction_gaps(s, w), b = mimo_direction_gaps(s2, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!a.active[i]) continue;
        EXPECT_NEAR(1.0 / b.per_direction[i] - 1.0, 2.0 * (1.0 / a.per_direction[i] - 1.0), 1e-12);
    }
}

TEST(MimoGaps, InactiveDirectionsAndErrors) {
    const MimoSpec s{{2.0, 0.1}, 0.5, 1.0};
    const auto w = water_filling(s).powers;
    const DirectionGaps g = mimo_direction_gaps(s, w);
    EXPECT_FALSE(g.active[1]);
    EXPECT_TRUE(std::isnan(g.per_direction[1]));
    EXPECT_EQ(g.stiffness_ratio, 1.0);
    EXPECT_THROW(mimo_direction_gaps(s, {0.0, 0.0}), ValidationError);
    EXPECT_THROW(mimo_direction_gaps(s, {1.0}), ValidationError);
}

TEST(MimoGaps, StiffnessRatioProperties) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> g(0.1, 3.0);
    for (int k = 0; k < 100; ++k) {
        MimoSpec s{{g(rng), g(rng), g(rng)}, 5.0, 1.0};
        const DirectionGaps d = mimo_direction_gaps(s, water_filling(s).powers);
        EXPECT_GE(d.stiffness_ratio, 1.0);
    }
    // equal gain-power products give ratio exactly 1
    const MimoSpec e{{1.0, 2.0}, 1.0, 1.0};
    EXPECT_DOUBLE_EQ(mimo_direction_gaps(e, {1.0, 0.5}).stiffness_ratio, 1.0);
}

TEST(WynerZiv, EffectiveBetaExamples) {
    for (double v : {0.0, 0.3, 0.9}) EXPECT_DOUBLE_EQ(wz_effective_beta({1.0, 0.0, 2.0}, v), 2.0);
    EXPECT_NEAR(wz_effective_beta({1.0, 0.5, 1.0}, 0.5), 0.5625 / 0.765625, 1e-15);
    EXPECT_NEAR(wz_effective_beta({1.0, 0.5, 1.0}, 0.5), 0.734694, 1e-6);
    // depends on (rho, s / sigma2) only
    EXPECT_NEAR(wz_effective_beta({4.0, 0.6, 1.0}, 2.0), wz_effective_beta({1.0, 0.6, 1.0}, 0.5), 1e-15);
    EXPECT_THROW(wz_effective_beta({1.0, 0.9, 1.0}, 2.0), ValidationError);
    EXPECT_THROW(wz_effective_beta({1.0, 1.0, 1.0}, 0.1), ValidationError);
}

TEST(WynerZiv, EffectiveBetaBelowBeta) {
    for (double rho = -0.95; rho < 0.96; rho += 0.05) {
        const double r = std::abs(rho) < 1e-9 ? 0.0 : rho;
        for (double f = 0.0; f < 1.0; f += 0.02) {
            const double b = wz_effective_beta({2.0, r, 1.5}, f * 2.0);
            EXPECT_LE(b, 1.5 * (1.0 + 1e-15));
            if (r != 0.0) {
                EXPECT_LT(b, 1.5);
            }
        }
        // s = sigma2 touches beta for every rho
        EXPECT_NEAR(wz_effective_beta({2.0, r, 1.5}, 2.0), 1.5, 1e-14);
    }
}

TEST(WynerZiv, RateGap) {
    EXPECT_EQ(wz_rate_gap(0.0), 0.0);
    EXPECT_NEAR(wz_rate_gap(std::sqrt(0.75)), std::log(2.0), 1e-15);
    EXPECT_EQ(wz_rate_gap(0.4), wz_rate_gap(-0.4));
    double prev = -1.0;
    for (double r = 0.0; r < 0.999; r += 0.01) {
        EXPECT_GT(wz_rate_gap(r), prev);
        prev = wz_rate_gap(r);
    }
    EXPECT_THROW(wz_rate_gap(1.0), ValidationError);
}

TEST(WynerZiv, OdeReducesWithoutSideInformation) {
    const WynerZivSpec s{1.0, 0.0, 2.0};
    const ScalarSeries a = wz_variance_ode(s, 0.9, 0.05, 10.0);
    const ScalarSeries b = integrate_variance_ode({1.0, 2.0}, 0.9, 0.05, 10.0);
    ASSERT_EQ(a.s.size(), b.s.size());
    for (std::size_t i = 0; i < a.s.size(); ++i) EXPECT_DOUBLE_EQ(a.s[i], b.s[i]);
    EXPECT_NEAR(wz_fixed_point(s), 0.75, 1e-10);
}

TEST(WynerZiv, FixedPointShiftsWithCorrelation) {
    const double f0 = wz_fixed_point({1.0, 0.0, 2.0});
    const double f3 = wz_fixed_point({1.0, 0.3, 2.0});
    const double f6 = wz_fixed_point({1.0, 0.6, 2.0});
    EXPECT_GT(f0, f3);
    EXPECT_GT(f3, f6);
    EXPECT_NEAR(wz_field({1.0, 0.3, 2.0}, f3), 0.0, 1e-12);
}

TEST(WynerZiv, OdeStaysInValidRegion) {
    for (double rho : {0.3, 0.6, 0.9}) {
        const WynerZivSpec s{1.0, rho, 2.0};
        for (double s0 : {0.05, 0.5, 0.99}) {
            const ScalarSeries out = wz_variance_ode(s, s0, 0.05, 20.0);
            for (double v : out.s) EXPECT_LT(rho * rho * v, 1.0);
        }
    }
    EXPECT_THROW(wz_variance_ode({1.0, 0.9, 2.0}, 1.5, 0.05, 1.0), ValidationError);
}
