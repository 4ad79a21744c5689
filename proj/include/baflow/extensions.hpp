#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gaussian.hpp"

namespace baflow {

struct MimoSpec {
    std::vector<double> channel_gains;
    double total_power = 1.0;
    double beta = 1.0;

    void validate() const {
        require(!channel_gains.empty(), "MimoSpec: need at least one channel");
        for (double g : channel_gains) require(g > 0.0 && std::isfinite(g), "MimoSpec: gains must be positive");
        require(total_power > 0.0 && std::isfinite(total_power), "MimoSpec: total power must be positive");
        require(beta > 0.0, "MimoSpec: beta must be positive");
    }
};

struct WaterFilling {
    std::vector<double> powers;
    double level = 0.0; // mu
    std::size_t active = 0;
};

// P_i = (mu - 1/lambda_i)_+ with sum P_i = P; exact water level from the sorted thresholds.
inline WaterFilling water_filling(const MimoSpec& s) {
    s.validate();
    const std::size_t n = s.channel_gains.size();
    std::vector<double> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / s.channel_gains[i];
    std::vector<double> sorted = inv;
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0, mu = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        acc += sorted[j];
        const double cand = (s.total_power + acc) / double(j + 1);
        if (j + 1 == n || cand <= sorted[j + 1]) {
            mu = cand;
            k = j + 1;
            break;
        }
    }
    WaterFilling w;
    w.level = mu;
    w.active = k;
    w.powers.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.powers[i] = std::max(mu - inv[i], 0.0);
    return w;
}

struct DirectionGaps {
    std::vector<double> per_direction; // NaN for inactive directions
    std::vector<bool> active;
    double system_gap = 0.0;
    double stiffness_ratio = 1.0;
};

enum class MimoGapVariant {
    caption, // 1 / (1 + 2 beta lambda_i P_i)
    text     // 1 / (2 beta sigma2_i) with sigma2_i = lambda_i P_i
};

inline DirectionGaps mimo_direction_gaps(const MimoSpec& s, const std::vector<double>& powers,
                                         MimoGapVariant variant = MimoGapVariant::caption) {
    s.validate();
    require(powers.size() == s.channel_gains.size(), "mimo_direction_gaps: powers and gains differ in size");
    DirectionGaps g;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        const bool on = powers[i] > 0.0;
        g.active.push_back(on);
        if (!on) {
            g.per_direction.push_back(std::nan(""));
            continue;
        }
        const double snr = s.channel_gains[i] * powers[i];
        const double v = variant == MimoGapVariant::caption ? 1.0 / (1.0 + 2.0 * s.beta * snr) : 1.0 / (2.0 * s.beta * snr);
        g.per_direction.push_back(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > 0.0)) throw ValidationError("mimo_direction_gaps: no active direction");
    g.system_gap = lo;
    g.stiffness_ratio = hi / lo;
    return g;
}

struct WynerZivSpec {
    double sigma2 = 1.0;
    double rho = 0.0;
    double beta = 1.0;

    void validate() const {
        require(sigma2 > 0.0, "WynerZivSpec: sigma2 must be positive");
        require(std::abs(rho) < 1.0, "WynerZivSpec: |rho| must be below 1");
        require(beta > 0.0, "WynerZivSpec: beta must be positive");
    }
};

inline double wz_effective_beta(const WynerZivSpec& s, double v) {
    s.validate();
    const double den = s.sigma2 - s.rho * s.rho * v;
    require(den > 0.0, "wz_effective_beta: rho^2 s must stay below sigma2");
    const double num = s.sigma2 * s.sigma2 * (1.0 - s.rho * s.rho) * (1.0 - s.rho * s.rho);
    return s.beta * num / (den * den);
}

// I(X;Y) for correlation rho, in nats.
inline double wz_rate_gap(double rho) {
    require(std::abs(rho) < 1.0, "wz_rate_gap: |rho| must be below 1");
    return 0.5 * std::log(1.0 / (1.0 - rho * rho));
}

// Interpreted composition: s' = s_tilde(s; sigma2, beta_eff(s, rho)) - s.
inline double wz_field(const WynerZivSpec& s, double v) {
    return s_tilde(v, GaussianParams{s.sigma2, wz_effective_beta(s, v)}) - v;
}

inline ScalarSeries wz_variance_ode(const WynerZivSpec& s, double s0, double dt, double t_max) {
    s.validate();
    require(s0 >= 0.0, "wz_variance_ode: s0 must be non-negative");
    require(s.rho * s.rho * s0 < s.sigma2, "wz_variance_ode: start outside the valid region");
    return integrate_scalar(
        [&](double v) {
            if (!(s.rho * s.rho * v < s.sigma2)) throw NumericalError("wz_variance_ode: left the valid region");
            return wz_field(s, std::max(v, 0.0));
        },
        s0, dt, t_max);
}

// Largest root of the interpreted field in (0, min(sigma2, sigma2/rho^2)), or 0 when none.
inline double wz_fixed_point(const WynerZivSpec& s, int scan = 4000) {
    s.validate();
    const double top = s.rho == 0.0 ? s.sigma2 : std::min(s.sigma2, s.sigma2 / (s.rho * s.rho));
    double prev_v = top * (1.0 - 1e-12);
    double prev_f = wz_field(s, prev_v);
    for (int i = scan - 1; i >= 1; --i) {
        const double v = top * double(i) / double(scan);
        const double f = wz_field(s, v);
        if ((f > 0.0) != (prev_f > 0.0)) {
            double lo = v, hi = prev_v;
            for (int k = 0; k < 200; ++k) {
                const double mid = 0.5 * (lo + hi);
                if ((wz_field(s, mid) > 0.0) == (f > 0.0)) lo = mid;
                else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_v = v;
        prev_f = f;
    }
    return 0.0;
}

} // namespace baflow
