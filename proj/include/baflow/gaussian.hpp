#pragma once

#include <cmath>
#include <vector>

#include "flow.hpp"
#include "spectral.hpp"

namespace baflow {

struct GaussianParams {
    double sigma2 = 1.0;
    double beta = 1.0;

    void validate() const {
        require(sigma2 > 0.0 && std::isfinite(sigma2), "GaussianParams: sigma2 must be positive");
        require(beta > 0.0 && std::isfinite(beta), "GaussianParams: beta must be positive");
    }
    // s* <= 0: the fixed point collapses onto the origin
    bool degenerate() const { return 2.0 * beta * sigma2 <= 1.0; }
    double s_star() const { return sigma2 - 1.0 / (2.0 * beta); }
    double alpha() const { return 1.0 - 1.0 / (2.0 * beta * sigma2); }
};

// Second moment of Tq when q = N(0, s) and the source is N(0, sigma2) under squared error.
inline double s_tilde(double s, const GaussianParams& gp) {
    require(s >= 0.0, "s_tilde: s must be non-negative");
    gp.validate();
    const double u = 1.0 + 2.0 * gp.beta * s;
    const double r = 2.0 * gp.beta * s / u;
    return s / u + r * r * gp.sigma2;
}

inline double variance_field(double s, const GaussianParams& gp) { return s_tilde(s, gp) - s; }

inline double variance_field_derivative(double s, const GaussianParams& gp, double h = 1e-6) {
    return (variance_field(s + h, gp) - variance_field(s - h, gp)) / (2.0 * h);
}

inline ScalarSeries integrate_variance_ode(const GaussianParams& gp, double s0, double dt, double t_max) {
    require(s0 >= 0.0, "integrate_variance_ode: s0 must be non-negative");
    gp.validate();
    return integrate_scalar([&](double s) { return variance_field(std::max(s, 0.0), gp); }, s0, dt, t_max);
}

struct HermiteSpectrum {
    double alpha = 0.0;
    Vec eigenvalues;      // alpha^n, n = 1..n_max: eigenvalues of DT at the Gaussian fixed point
    Vec relaxation;       // 1 - alpha^n
    double kernel_variance = 0.0; // s*(1 - alpha^2) + alpha^2/(2 beta), reported only
};

inline HermiteSpectrum hermite_spectrum(const GaussianParams& gp, int n_max) {
    gp.validate();
    require(!gp.degenerate(), "hermite_spectrum: degenerate regime (2 beta sigma2 <= 1)");
    require(n_max >= 1, "hermite_spectrum: n_max must be positive");
    HermiteSpectrum h;
    h.alpha = gp.alpha();
    h.eigenvalues.resize(n_max);
    h.relaxation.resize(n_max);
    double a = 1.0;
    for (int n = 0; n < n_max; ++n) {
        a *= h.alpha;
        h.eigenvalues[n] = a;
        h.relaxation[n] = 1.0 - a;
    }
    h.kernel_variance = gp.s_star() * (1.0 - h.alpha * h.alpha) + h.alpha * h.alpha / (2.0 * gp.beta);
    return h;
}

struct GaussianGap {
    double lambda_star = 0.0;
    double tau_relax = 0.0;
};

inline GaussianGap gaussian_gap(const GaussianParams& gp) {
    gp.validate();
    require(!gp.degenerate(), "gaussian_gap: degenerate regime (2 beta sigma2 <= 1)");
    const double tau = 2.0 * gp.beta * gp.sigma2;
    return {1.0 / tau, tau};
}

struct MultivariateGaussianParams {
    std::vector<double> sigma2s;
    double beta = 1.0;
};

struct MultivariateGap {
    double lambda_sys = 0.0;
    std::vector<double> per_direction;
    double stiffness_ratio = 1.0;
    std::vector<bool> degenerate;
    bool any_degenerate = false;
};

inline MultivariateGap multivariate_gap(const MultivariateGaussianParams& mgp) {
    require(!mgp.sigma2s.empty(), "multivariate_gap: need at least one direction");
    require(mgp.beta > 0.0, "multivariate_gap: beta must be positive");
    MultivariateGap g;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double s2 : mgp.sigma2s) {
        require(s2 > 0.0, "multivariate_gap: variances must be positive");
        const double l = 1.0 / (2.0 * mgp.beta * s2);
        const bool deg = 2.0 * mgp.beta * s2 <= 1.0;
        g.per_direction.push_back(l);
        g.degenerate.push_back(deg);
        g.any_degenerate = g.any_degenerate || deg;
        lo = std::min(lo, l);
        hi = std::max(hi, l);
    }
    g.lambda_sys = lo;
    g.stiffness_ratio = hi / lo;
    return g;
}

struct ConvergenceTimeBound {
    double entry_term = 0.0;
    double contraction_term = 0.0;
    double total = 0.0;
    bool clamped = false; // eps >= C0 * dist_entry
};

inline ConvergenceTimeBound convergence_time_bound(const GaussianParams& gp, double f0_minus_fstar, double delta0,
                                                   double c0, double dist_entry, double eps) {
    gp.validate();
    require(f0_minus_fstar >= 0.0 && delta0 > 0.0 && c0 > 0.0 && dist_entry > 0.0 && eps > 0.0,
            "convergence_time_bound: inputs must be positive");
    ConvergenceTimeBound b;
    b.entry_term = 2.0 * f0_minus_fstar / (delta0 * delta0);
    const double lg = std::log(c0 * dist_entry / eps);
    b.clamped = lg <= 0.0;
    b.contraction_term = b.clamped ? 0.0 : 2.0 * gp.beta * gp.sigma2 * lg;
    b.total = b.entry_term + b.contraction_term;
    return b;
}

// Reproduction nodes on [-L, L]; source nodes on the same lattice extended by a margin.
struct GaussianGrid {
    BAProblem problem;
    Vec nodes;
    Vec source_nodes;
    double spacing = 0.0;
};

inline GaussianGrid discretize_gaussian(const GaussianParams& gp, double half_width_sigmas = 6.0, int n_points = 201,
                                        double source_margin_sigmas = 6.0) {
    gp.validate();
    require(n_points >= 51 && n_points % 2 == 1, "discretize_gaussian: n_points must be odd and at least 51");
    require(half_width_sigmas >= 5.0, "discretize_gaussian: half_width_sigmas must be at least 5");
    require(source_margin_sigmas >= 0.0, "discretize_gaussian: margin must be non-negative");
    const double sigma = std::sqrt(gp.sigma2);
    const double l = half_width_sigmas * sigma;
    const double h = 2.0 * l / double(n_points - 1);
    const int half = (n_points - 1) / 2;
    const int extra = int(std::ceil(source_margin_sigmas * sigma / h - 1e-9));
    const int ms = 2 * (half + extra) + 1;
    Vec y(n_points), x(ms), p(ms);
    for (int i = 0; i < n_points; ++i) y[i] = double(i - half) * h;
    for (int i = 0; i < ms; ++i) {
        x[i] = double(i - half - extra) * h;
        p[i] = std::exp(-x[i] * x[i] / (2.0 * gp.sigma2));
    }
    Mat d(ms, n_points);
    for (int i = 0; i < ms; ++i)
        for (int j = 0; j < n_points; ++j) d(i, j) = (x[i] - y[j]) * (x[i] - y[j]);
    return {BAProblem(ProbVec::normalized(p), std::move(d), gp.beta), y, x, h};
}

// Grid states have legitimately tiny tails; the default floor is meant for small alphabets.
inline IntegratorConfig grid_integrator_config(double t_max, double dt = 0.05) {
    IntegratorConfig c;
    c.dt = dt;
    c.t_max = t_max;
    c.positivity_floor = 1e-250;
    return c;
}

inline double grid_second_moment(const GaussianGrid& g, const ProbVec& q) {
    return q.values().dot(g.nodes.cwiseProduct(g.nodes));
}

inline double grid_mean(const GaussianGrid& g, const ProbVec& q) { return q.values().dot(g.nodes); }

enum class GridShape { gaussian, bimodal, uniform };

// Centred initial states with second moment close to s0 (exactly s0 before discretisation).
inline ProbVec grid_initial_state(const GaussianGrid& g, GridShape shape, double s0) {
    require(s0 > 0.0, "grid_initial_state: s0 must be positive");
    const Vec& y = g.nodes;
    Vec w(y.size());
    switch (shape) {
    case GridShape::gaussian:
        w = (-(y.array().square()) / (2.0 * s0)).exp().matrix();
        break;
    case GridShape::bimodal: {
        const double v = 0.25 * s0, mu = std::sqrt(0.75 * s0);
        w = ((-(y.array() - mu).square() / (2.0 * v)).exp() + (-(y.array() + mu).square() / (2.0 * v)).exp()).matrix();
        break;
    }
    case GridShape::uniform: {
        const double a = std::sqrt(3.0 * s0);
        for (Index i = 0; i < y.size(); ++i) w[i] = std::abs(y[i]) <= a ? 1.0 : 0.0;
        break;
    }
    }
    // keep the state interior
    w.array() += 1e-12 * w.maxCoeff();
    return ProbVec::normalized(w);
}

inline FixedPointResult gaussian_grid_fixed_point(const GaussianGrid& g, const GaussianParams& gp, double tol = 1e-6,
                                                  long max_iter = 20000) {
    return ba_fixed_point(g.problem, grid_initial_state(g, GridShape::gaussian, gp.sigma2), tol, max_iter);
}

struct MomentBound {
    Mat lambda;
    Mat h;
    double c1 = 0.0;
    double c2 = 0.0;
    double c = 0.0;

    double level() const { return c1 / c; }
    double bound(double v0) const { return std::max(v0, level()); }
};

inline MomentBound moment_bound_constants(const Mat& sigma_p, const Mat& a, double beta) {
    require(sigma_p.rows() == sigma_p.cols() && a.rows() == a.cols() && a.rows() == sigma_p.rows(),
            "moment_bound_constants: matrices must be square and of equal size");
    require(beta >= 0.0, "moment_bound_constants: beta must be non-negative");
    auto pd = [](const Mat& m) {
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
        Eigen::LLT<Mat> llt(m);
        return llt.info() == Eigen::Success;
    };
    require(pd(sigma_p), "moment_bound_constants: Sigma_P must be symmetric positive definite");
    require(pd(a), "moment_bound_constants: A must be symmetric positive definite");
    MomentBound mb;
    mb.lambda = sigma_p.inverse() + 2.0 * beta * a;
    const Mat li = mb.lambda.inverse();
    mb.h = 2.0 * beta * a * li;
    mb.c1 = li.trace();
    Eigen::JacobiSVD<Mat> svd(mb.h);
    const double op = svd.singularValues()[0];
    mb.c2 = op * op;
    mb.c = 1.0 - mb.c2;
    if (!(mb.c > 0.0)) throw NumericalError("moment_bound_constants: contraction constant is not positive");
    return mb;
}

inline MomentBound moment_bound_constants(double sigma_p2, double a, double beta) {
    return moment_bound_constants(Mat::Constant(1, 1, sigma_p2), Mat::Constant(1, 1, a), beta);
}

struct PhasePoint {
    double s;
    double field;
};

inline std::vector<PhasePoint> phase_portrait(const GaussianParams& gp, double s_max, int n) {
    require(n >= 2 && s_max > 0.0, "phase_portrait: need n >= 2 and s_max > 0");
    std::vector<PhasePoint> out;
    for (int i = 0; i < n; ++i) {
        const double s = s_max * double(i) / double(n - 1);
        out.push_back({s, variance_field(s, gp)});
    }
    return out;
}

} // namespace baflow
