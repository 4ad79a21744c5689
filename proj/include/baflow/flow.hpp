#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ba_core.hpp"
#include "ode.hpp"

namespace baflow {

enum class Method { rk4, euler };

inline Method parse_method(const std::string& s) {
    if (s == "rk4") return Method::rk4;
    if (s == "euler") return Method::euler;
    throw ValidationError("unknown integrator method: " + s);
}

inline const char* to_string(Method m) { return m == Method::rk4 ? "rk4" : "euler"; }

struct IntegratorConfig {
    double dt = 0.05;
    double t_max = 10.0;
    Method method = Method::rk4;
    int sample_every = 1;
    bool renormalize = true;
    double positivity_floor = 1e-14;
    int max_halvings = 8;

    void validate() const {
        require(dt > 0.0 && std::isfinite(dt), "IntegratorConfig: dt must be positive");
        require(t_max >= dt, "IntegratorConfig: t_max must be at least dt");
        require(sample_every >= 1, "IntegratorConfig: sample_every must be at least 1");
        require(positivity_floor >= 0.0, "IntegratorConfig: positivity_floor must be non-negative");
        require(max_halvings >= 0, "IntegratorConfig: max_halvings must be non-negative");
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ProbVec> states;
    std::vector<double> free_energy;
    std::vector<double> dissipation;
    std::vector<double> residual_l1;
    std::vector<double> dist_to_ref_l1; // empty without a reference
    double dt = 0.0;
    // largest increase of free_energy between consecutive samples
    double max_free_energy_increase = 0.0;
    bool lyapunov_violation = false;

    std::size_t size() const { return times.size(); }
    bool has_ref() const { return !dist_to_ref_l1.empty(); }
};

namespace detail {

// Advances q by h; returns nullopt if any stage leaves the floor.
inline std::optional<Vec> flow_step(const BAProblem& prob, const Vec& q, double h, Method method,
                                    double floor) {
    auto field = [&](const Vec& x) -> Vec {
        if (!(x.minCoeff() > floor)) throw std::range_error("floor");
        Vec f = ba_map_raw(prob, x) - x;
        if (!f.allFinite()) throw NumericalError("non-finite vector field");
        return f;
    };
    try {
        Vec next = method == Method::rk4 ? rk4_step(field, q, h) : Vec(q + h * field(q));
        if (!(next.minCoeff() > floor)) return std::nullopt;
        return next;
    } catch (const std::range_error&) {
        return std::nullopt;
    }
}

inline void record_sample(Trajectory& tr, const BAProblem& prob, double t, const ProbVec& q,
                          const std::optional<ProbVec>& ref) {
    const GibbsState g = gibbs_state(prob, q);
    const Vec tq = g.kernels.transpose() * prob.source().values();
    tr.times.push_back(t);
    tr.free_energy.push_back(-prob.source().values().dot(g.log_partition));
    tr.dissipation.push_back(divergence(Divergence::chi2, tq, q.values()));
    tr.residual_l1.push_back((tq - q.values()).cwiseAbs().sum());
    if (ref) tr.dist_to_ref_l1.push_back((q.values() - ref->values()).cwiseAbs().sum());
    tr.states.push_back(q);
}

} // namespace detail

inline Trajectory integrate_flow(const BAProblem& prob, const ProbVec& q0, const IntegratorConfig& cfg,
                                 const std::optional<ProbVec>& ref = std::nullopt) {
    cfg.validate();
    detail::check_dims(q0.dim(), prob.dim(), "integrate_flow");
    if (ref) detail::check_dims(ref->dim(), prob.dim(), "integrate_flow reference");
    const long n = step_count(cfg.dt, cfg.t_max);

    Trajectory tr;
    tr.dt = cfg.dt;
    Vec q = q0.values();
    detail::record_sample(tr, prob, 0.0, q0, ref);
    for (long i = 1; i <= n; ++i) {
        bool done = false;
        for (int k = 0; k <= cfg.max_halvings && !done; ++k) {
            const long sub = 1L << k;
            const double h = cfg.dt / double(sub);
            Vec x = q;
            bool ok = true;
            for (long j = 0; j < sub && ok; ++j) {
                auto nx = detail::flow_step(prob, x, h, cfg.method, cfg.positivity_floor);
                if (!nx) ok = false;
                else x = std::move(*nx);
            }
            if (ok) {
                q = std::move(x);
                done = true;
            }
        }
        if (!done)
            throw NumericalError("integrate_flow: state left the interior at step " + std::to_string(i));
        if (cfg.renormalize) q /= q.sum();
        if (i % cfg.sample_every == 0 || i == n) {
            detail::record_sample(tr, prob, double(i) * cfg.dt, ProbVec::normalized(q), ref);
            const std::size_t k = tr.size();
            const double inc = tr.free_energy[k - 1] - tr.free_energy[k - 2];
            tr.max_free_energy_increase = std::max(tr.max_free_energy_increase, inc);
        }
    }
    tr.lyapunov_violation = tr.max_free_energy_increase > 10.0 * cfg.dt * cfg.dt;
    return tr;
}

struct FixedPointResult {
    ProbVec q;
    double residual; // dual identity residual of q
    long iterations;
    bool converged;
};

// Discrete iteration q <- Tq until max|Tq/q - 1| <= tol.
inline FixedPointResult ba_fixed_point(const BAProblem& prob, const ProbVec& q0, double tol = 1e-12,
                                       long max_iter = 200000) {
    require(tol > 0.0, "ba_fixed_point: tol must be positive");
    require(max_iter >= 1, "ba_fixed_point: max_iter must be positive");
    detail::check_dims(q0.dim(), prob.dim(), "ba_fixed_point");
    Vec q = q0.values();
    Vec best = q;
    double best_res = std::numeric_limits<double>::infinity();
    for (long it = 0; it <= max_iter; ++it) {
        Vec tq = detail::ba_map_raw(prob, q);
        if (!tq.allFinite()) throw NumericalError("ba_fixed_point: non-finite iterate");
        const double res = (tq.cwiseQuotient(q).array() - 1.0).abs().maxCoeff();
        if (res < best_res) {
            best_res = res;
            best = q;
        }
        if (res <= tol) return {ProbVec::normalized(q), res, it, true};
        q = tq / tq.sum();
        if (!(q.minCoeff() > 1e-290))
            throw NumericalError("ba_fixed_point: iterate reached the positivity floor (boundary fixed point?)");
    }
    return {ProbVec::normalized(best), best_res, max_iter, false};
}

struct DissipationReport {
    double max_abs_err = 0.0;
    std::vector<double> times;
    std::vector<double> per_sample_err;
};

// Centered differences of the free-energy series against minus the dissipation.
inline DissipationReport verify_dissipation(const BAProblem& prob, const Trajectory& traj) {
    require(traj.size() >= 3, "verify_dissipation: need at least 3 samples");
    detail::check_dims(traj.states.front().dim(), prob.dim(), "verify_dissipation");
    DissipationReport r;
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
        const double dfdt =
            (traj.free_energy[i + 1] - traj.free_energy[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
        const double e = std::abs(dfdt + traj.dissipation[i]);
        r.times.push_back(traj.times[i]);
        r.per_sample_err.push_back(e);
        r.max_abs_err = std::max(r.max_abs_err, e);
    }
    return r;
}

inline std::vector<double> distances_l1(const Trajectory& traj, const ProbVec& ref) {
    std::vector<double> d;
    d.reserve(traj.size());
    for (const auto& q : traj.states) d.push_back((q.values() - ref.values()).cwiseAbs().sum());
    return d;
}

struct DecayFit {
    double rate = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
    double t_begin = 0.0;
    double t_end = 0.0;
    bool monotone_tail = true;
};

inline constexpr double kDistanceNoiseFloor = 1e-13;

// Least-squares slope of log distance over the final tail_fraction of samples.
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& dist, double tail_fraction) {
    require(tail_fraction > 0.0 && tail_fraction < 1.0, "fit_decay_rate: tail_fraction must be in (0,1)");
    require(t.size() == dist.size() && t.size() >= 3, "fit_decay_rate: need at least 3 samples");
    const std::size_t n = t.size();
    const std::size_t start = std::min(n - 1, std::size_t(std::floor((1.0 - tail_fraction) * double(n))));
    std::vector<double> tt, ly;
    DecayFit f;
    for (std::size_t i = start; i < n; ++i) {
        if (dist[i] < kDistanceNoiseFloor) break;
        if (!tt.empty() && dist[i] > std::exp(ly.back())) f.monotone_tail = false;
        tt.push_back(t[i]);
        ly.push_back(std::log(dist[i]));
    }
    if (tt.size() < 3) throw NumericalError("fit_decay_rate: fit rejected, distance at the noise floor");
    const auto [slope, r2] = fit_line(tt, ly);
    f.rate = -slope;
    f.r_squared = r2;
    f.n_points = tt.size();
    f.t_begin = tt.front();
    f.t_end = tt.back();
    return f;
}

inline DecayFit fit_decay_rate(const Trajectory& traj, const ProbVec& ref, double tail_fraction) {
    return fit_decay_rate(traj.times, distances_l1(traj, ref), tail_fraction);
}

struct EntryTimeReport {
    std::optional<double> t_entry;
    double bound = 0.0;
    bool holds = true;
};

inline EntryTimeReport entry_time_report(const BAProblem& prob, const Trajectory& traj, double delta0,
                                         double f_star) {
    require(delta0 > 0.0, "entry_time_report: delta0 must be positive");
    require(traj.size() >= 1, "entry_time_report: empty trajectory");
    detail::check_dims(traj.states.front().dim(), prob.dim(), "entry_time_report");
    EntryTimeReport r;
    r.bound = 2.0 * (traj.free_energy.front() - f_star) / (delta0 * delta0);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.residual_l1[i] < delta0) {
            r.t_entry = traj.times[i];
            break;
        }
    }
    if (r.t_entry) r.holds = *r.t_entry <= std::max(r.bound, 0.0);
    return r;
}

} // namespace baflow
