#pragma once

#include <array>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

#include "flow.hpp"
#include "spectral.hpp"

namespace baflow {

// ---- two-point model: p = (alpha, 1 - alpha), d = beta_d off the diagonal, beta = 1

struct TwoPointSpec {
    double alpha = 0.5;
    double beta_d = 1.0;

    void validate() const {
        require(alpha > 0.0 && alpha < 1.0, "TwoPointSpec: alpha must lie in (0,1)");
        require(beta_d > 0.0 && std::isfinite(beta_d), "TwoPointSpec: beta_d must be positive");
    }
};

inline BAProblem two_point_problem(const TwoPointSpec& s) {
    s.validate();
    Mat d(2, 2);
    d << 0.0, s.beta_d, s.beta_d, 0.0;
    return BAProblem(ProbVec(Vec{{s.alpha, 1.0 - s.alpha}}), d, 1.0);
}

// First coordinate of T(theta, 1 - theta).
inline double two_point_map(const TwoPointSpec& s, double theta) {
    const double e = std::exp(-s.beta_d);
    return s.alpha * theta / (theta + e * (1.0 - theta)) + (1.0 - s.alpha) * theta * e / (theta * e + 1.0 - theta);
}

inline double two_point_fixed_point_residual(const TwoPointSpec& s, double theta) {
    return theta - two_point_map(s, theta);
}

// Residual of the scalar equation as printed in the source text; it pairs K_1(1) instead of K_1(0)
// in the second term and is not satisfied at the true fixed point. Reported, never solved.
inline double two_point_displayed_equation_residual(const TwoPointSpec& s, double theta) {
    const double e = std::exp(-s.beta_d);
    const double rhs = s.alpha / (1.0 + e * (1.0 - theta) / theta) + (1.0 - s.alpha) / (1.0 + e * theta / (1.0 - theta));
    return theta - rhs;
}

// The fixed point is interior iff both vertices are repelling.
inline bool two_point_has_interior_fixed_point(const TwoPointSpec& s) {
    const double e = std::exp(s.beta_d);
    return s.alpha * e + (1.0 - s.alpha) / e > 1.0 && (1.0 - s.alpha) * e + s.alpha / e > 1.0;
}

// Bisection on theta - T(theta)_0; independent of the operator code.
inline double two_point_theta(const TwoPointSpec& s) {
    s.validate();
    if (!two_point_has_interior_fixed_point(s))
        throw ValidationError("two_point_theta: no interior fixed point for these parameters");
    double lo = 1e-15, hi = 1.0 - 1e-15;
    // f(lo) < 0 < f(hi) when both vertices repel
    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (two_point_fixed_point_residual(s, mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double two_point_gap_closed_form(const TwoPointSpec& s, double theta) {
    require(theta > 0.0 && theta < 1.0, "two_point_gap_closed_form: theta must lie in (0,1)");
    const double e = std::exp(-s.beta_d);
    const double num = (1.0 - e) * (1.0 - e);
    const double den = (theta + (1.0 - theta) * e) * (theta * e + (1.0 - theta));
    return 0.5 * s.alpha * (1.0 - s.alpha) * num / den;
}

inline double two_point_symmetric_gap(double beta_d) {
    const double t = std::tanh(0.5 * beta_d);
    return 0.5 * t * t;
}

struct TwoPointGapRow {
    double alpha = 0.0;
    double beta_d = 0.0;
    bool interior = false;
    double theta = std::nan("");
    double lambda_pipeline = std::nan("");
    double lambda_closed_form = std::nan("");
    double relaxation_rate = std::nan(""); // eigenvalue of -DV on the tangent line
};

inline TwoPointGapRow two_point_gap_row(const TwoPointSpec& s, double tol = 1e-13) {
    TwoPointGapRow r{s.alpha, s.beta_d};
    r.interior = two_point_has_interior_fixed_point(s);
    if (!r.interior) return r;
    const BAProblem prob = two_point_problem(s);
    const FixedPointResult fp = ba_fixed_point(prob, ProbVec::uniform(2), tol, 2000000);
    if (!fp.converged) throw NumericalError("two_point_gap_row: fixed point did not converge");
    r.theta = fp.q[0];
    r.lambda_pipeline = tangent_spectrum(gram_kernel(prob, fp.q)).gap;
    r.lambda_closed_form = two_point_gap_closed_form(s, r.theta);
    r.relaxation_rate = jacobian_spectrum(prob, fp.q).relaxation.gap;
    return r;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; results are written by index.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::size_t(std::max(jobs, 1)), n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

inline std::vector<TwoPointGapRow> two_point_gap_surface(const std::vector<double>& alphas,
                                                         const std::vector<double>& beta_ds, int jobs = 1) {
    std::vector<TwoPointGapRow> rows(alphas.size() * beta_ds.size());
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        const TwoPointSpec s{alphas[i / beta_ds.size()], beta_ds[i % beta_ds.size()]};
        rows[i] = two_point_gap_row(s);
    });
    return rows;
}

// ---- three-cluster model: X = {0,1,2}, Y = three blocks of m symbols, cost 0 inside the own block

struct ThreeClusterSpec {
    int m = 5;
    double delta = 3.0;
    double beta = 2.0;
    std::array<double, 3> source_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    void validate() const {
        require(m >= 3, "ThreeClusterSpec: m must be at least 3");
        require(delta > 0.0 && std::isfinite(delta), "ThreeClusterSpec: delta must be positive");
        require(beta >= 0.0 && std::isfinite(beta), "ThreeClusterSpec: beta must be non-negative");
    }
    ProbVec source() const { return ProbVec::normalized(Vec{{source_weights[0], source_weights[1], source_weights[2]}}); }
};

inline BAProblem three_cluster_problem(const ThreeClusterSpec& s) {
    s.validate();
    Mat d(3, 3 * s.m);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3 * s.m; ++y) d(x, y) = (y / s.m == x) ? 0.0 : s.delta;
    return BAProblem(s.source(), d, s.beta);
}

// Cluster-mass dynamics: again a BA problem, on three symbols.
inline BAProblem three_cluster_mass_problem(const ThreeClusterSpec& s) {
    s.validate();
    Mat d = Mat::Constant(3, 3, s.delta);
    d.diagonal().setZero();
    return BAProblem(s.source(), d, s.beta);
}

inline Mat cluster_indicator(int m) {
    Mat a = Mat::Zero(3 * m, 3);
    for (int y = 0; y < 3 * m; ++y) a(y, y / m) = 1.0;
    return a;
}

inline Vec cluster_masses(const ThreeClusterSpec& s, const ProbVec& q) {
    detail::check_dims(q.dim(), 3 * s.m, "cluster_masses");
    return cluster_indicator(s.m).transpose() * q.values();
}

// Distribution with the given cluster masses; within each block proportional to `shape` (default flat).
inline ProbVec cluster_state(const ThreeClusterSpec& s, const Vec& masses, const Vec& shape = Vec()) {
    require(masses.size() == 3 && masses.minCoeff() > 0.0, "cluster_state: need three positive masses");
    const Vec sh = shape.size() ? shape : Vec::Ones(3 * s.m);
    require(sh.size() == 3 * s.m && sh.minCoeff() > 0.0, "cluster_state: shape must be positive of size 3m");
    Vec q(3 * s.m);
    for (int k = 0; k < 3; ++k) {
        const double tot = sh.segment(k * s.m, s.m).sum();
        q.segment(k * s.m, s.m) = sh.segment(k * s.m, s.m) * (masses[k] / tot);
    }
    return ProbVec::normalized(q);
}

// Deterministic mild perturbation of the uniform distribution.
inline ProbVec uniform_perturbed(Index n, double eps = 0.05) {
    Vec q(n);
    for (Index i = 0; i < n; ++i) q[i] = 1.0 + eps * std::sin(1.7 * double(i) + 0.3);
    return ProbVec::normalized(q);
}

struct ThreeClusterReduced {
    Mat reduced_gram;          // A^T C A, cluster-mass coordinates
    double reduced_gap_mass = 0.0;
    double reduced_gap_perentry = 0.0;
    int zero_modes = 0;        // of the full Gram kernel on the tangent space
    Vec mass_relaxation_fd;    // -DV of the mass dynamics (finite differences), ascending
    Vec mass_relaxation_gram;  // same from A^T C A diag(1/pi)
};

inline ThreeClusterReduced three_cluster_reduced(const ThreeClusterSpec& s, const ProbVec& q_star,
                                                 double certify_tol = 1e-8) {
    const BAProblem prob = three_cluster_problem(s);
    const GramKernel k = gram_kernel(prob, q_star, certify_tol);
    const Mat a = cluster_indicator(s.m);
    ThreeClusterReduced r;
    r.reduced_gram = a.transpose() * k.matrix * a;
    const SpectrumReport mass = tangent_spectrum(r.reduced_gram);
    r.reduced_gap_mass = mass.gap;
    r.reduced_gap_perentry = mass.gap / double(s.m);
    r.zero_modes = tangent_spectrum(k).zero_mode_count;
    const ProbVec pi = ProbVec::normalized(a.transpose() * q_star.values());
    const BAProblem mp = three_cluster_mass_problem(s);
    r.mass_relaxation_fd = jacobian_spectrum(mp, pi, {JacobianMethod::finite_difference, 1e-6, 1e-8, certify_tol})
                               .relaxation.eigenvalues;
    r.mass_relaxation_gram = weighted_gram_spectrum({r.reduced_gram, pi}).eigenvalues;
    return r;
}

// Equilibrium kernel entries for block k: {own-block entry, entry in block j}.
inline std::array<double, 2> three_cluster_kernel_entries(const ThreeClusterSpec& s, const Vec& pi, int k, int j) {
    const double e = std::exp(-s.beta * s.delta);
    const double den = pi[k] + e * (1.0 - pi[k]);
    return {(pi[k] / s.m) / den, (e * pi[j] / s.m) / den};
}

struct TwoScaleResult {
    Trajectory trajectory;
    ProbVec q_ref;
    std::vector<double> distance;
    bool degenerate = false;      // started at equilibrium
    bool has_plateau = false;
    double t_plateau_end = 0.0;
    DecayFit fit;
    double lambda_star = 0.0;     // larger of the two reduced normalisations
    double lambda_star_mass = 0.0;
    double lambda_star_perentry = 0.0;
    double bound_rate = 0.0;      // lambda_star / 4
    double fd_min_rate = 0.0;     // smallest non-zero eigenvalue of -DV at q_ref
};

inline TwoScaleResult two_scale_experiment(const ThreeClusterSpec& s, const ProbVec& q0, const IntegratorConfig& cfg,
                                           double tail_fraction = 0.3) {
    const BAProblem prob = three_cluster_problem(s);
    // within-block ratios are conserved by both the flow and the iteration, so the
    // iteration from q0 lands on the flow's limit point in the continuum
    const FixedPointResult fp = ba_fixed_point(prob, q0, 1e-13, 1000000);
    if (!fp.converged) throw NumericalError("two_scale_experiment: reference fixed point did not converge");
    TwoScaleResult r{integrate_flow(prob, q0, cfg, fp.q), fp.q};
    r.distance = r.trajectory.dist_to_ref_l1;
    const ThreeClusterReduced red = three_cluster_reduced(s, fp.q);
    r.lambda_star_mass = red.reduced_gap_mass;
    r.lambda_star_perentry = red.reduced_gap_perentry;
    r.lambda_star = std::max(red.reduced_gap_mass, red.reduced_gap_perentry);
    r.bound_rate = r.lambda_star / 4.0;
    const Vec rel = jacobian_spectrum(prob, fp.q).relaxation.eigenvalues;
    r.fd_min_rate = 0.0;
    for (Index i = 0; i < rel.size(); ++i)
        if (rel[i] > 1e-6) {
            r.fd_min_rate = rel[i];
            break;
        }
    if (r.distance.front() < kDistanceNoiseFloor) {
        r.degenerate = true;
        return r;
    }
    r.fit = fit_decay_rate(r.trajectory.times, r.distance, tail_fraction);
    const auto& t = r.trajectory.times;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        if (r.distance[i + 1] < kDistanceNoiseFloor) break;
        const double local = -(std::log(r.distance[i + 1]) - std::log(r.distance[i])) / (t[i + 1] - t[i]);
        if (local >= 0.5 * r.fit.rate) {
            r.t_plateau_end = t[i];
            break;
        }
    }
    r.has_plateau = r.t_plateau_end > 0.0;
    return r;
}

} // namespace baflow
