#pragma once

#include <cmath>
#include <limits>

#include "simplex.hpp"

namespace baflow {

// Rate-distortion problem: source p over X (size M), cost d (M x N), inverse temperature beta.
class BAProblem {
public:
    BAProblem(ProbVec source, Mat cost, double beta)
        : source_(std::move(source)), cost_(std::move(cost)), beta_(beta) {
        require(cost_.rows() == source_.dim(), "BAProblem: cost rows must match source size");
        require(cost_.cols() >= 2, "BAProblem: reproduction alphabet needs at least 2 symbols");
        require(cost_.allFinite(), "BAProblem: cost must be finite");
        // beta = 0 is admitted: the map is then the identity
        require(std::isfinite(beta_) && beta_ >= 0.0, "BAProblem: beta must be finite and non-negative");
    }

    const ProbVec& source() const { return source_; }
    const Mat& cost() const { return cost_; }
    double beta() const { return beta_; }
    Index source_dim() const { return cost_.rows(); }
    Index dim() const { return cost_.cols(); }

    BAProblem with_beta(double b) const { return BAProblem(source_, cost_, b); }

private:
    ProbVec source_;
    Mat cost_;
    double beta_;
};

struct GibbsState {
    Mat kernels;     // M x N, row-stochastic
    Vec log_partition;

    Vec partition() const { return log_partition.array().exp().matrix(); }
};

namespace detail {

inline void check_state(const BAProblem& prob, const Vec& q, const char* what) {
    check_dims(q.size(), prob.dim(), what);
    if (!q.allFinite() || !(q.minCoeff() > 0.0))
        throw ValidationError(std::string(what) + ": q must be finite and strictly positive");
}

// Works on any positive q; the kernels do not depend on the scale of q.
inline GibbsState gibbs_raw(const BAProblem& prob, const Vec& q) {
    const Index m = prob.source_dim(), n = prob.dim();
    const double b = prob.beta();
    const Mat& d = prob.cost();
    GibbsState g{Mat(m, n), Vec(m)};
    Vec logq = q.array().log().matrix();
    for (Index x = 0; x < m; ++x) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Index y = 0; y < n; ++y) {
            const double lw = logq[y] - b * d(x, y);
            g.kernels(x, y) = lw;
            mx = std::max(mx, lw);
        }
        double z = 0.0;
        for (Index y = 0; y < n; ++y) {
            const double w = std::exp(g.kernels(x, y) - mx);
            g.kernels(x, y) = w;
            z += w;
        }
        g.kernels.row(x) /= z;
        g.log_partition[x] = mx + std::log(z);
    }
    return g;
}

inline Vec ba_map_raw(const BAProblem& prob, const Vec& q) {
    const GibbsState g = gibbs_raw(prob, q);
    return g.kernels.transpose() * prob.source().values();
}

} // namespace detail

inline GibbsState gibbs_state(const BAProblem& prob, const ProbVec& q) {
    detail::check_state(prob, q.values(), "gibbs_state");
    return detail::gibbs_raw(prob, q.values());
}

inline ProbVec ba_map(const BAProblem& prob, const ProbVec& q) {
    detail::check_state(prob, q.values(), "ba_map");
    return ProbVec::normalized(detail::ba_map_raw(prob, q.values()));
}

// Vector field of the flow, Tq - q.
inline Vec ba_field(const BAProblem& prob, const ProbVec& q) {
    return ba_map(prob, q).values() - q.values();
}

// Likelihood ratio Psi = Tq / q.
inline Vec likelihood_ratio(const BAProblem& prob, const ProbVec& q) {
    return ba_map(prob, q).values().cwiseQuotient(q.values());
}

// Lyapunov potential -sum_x p(x) log Z_q(x). Its time derivative along the flow is exactly
// minus the chi-square dissipation.
inline double free_energy(const BAProblem& prob, const ProbVec& q) {
    const GibbsState g = gibbs_state(prob, q);
    return -prob.source().values().dot(g.log_partition);
}

inline Vec free_energy_gradient(const BAProblem& prob, const ProbVec& q) {
    return -likelihood_ratio(prob, q);
}

// sum_x p(x) log Z_q(x) + beta^-1 sum_y q log q. Not a Lyapunov function of the flow; see README.
inline double entropic_free_energy(const BAProblem& prob, const ProbVec& q) {
    require(prob.beta() > 0.0, "entropic_free_energy: beta must be positive");
    const GibbsState g = gibbs_state(prob, q);
    const Vec& qv = q.values();
    return prob.source().values().dot(g.log_partition) +
           (qv.array() * qv.array().log()).sum() / prob.beta();
}

// Exact Euclidean gradient of entropic_free_energy: Tq/q + beta^-1 (log q + 1).
inline Vec entropic_free_energy_gradient(const BAProblem& prob, const ProbVec& q) {
    require(prob.beta() > 0.0, "entropic_free_energy_gradient: beta must be positive");
    const Vec& qv = q.values();
    return likelihood_ratio(prob, q) + ((qv.array().log() + 1.0) / prob.beta()).matrix();
}

inline double dissipation(const BAProblem& prob, const ProbVec& q) {
    return divergence(Divergence::chi2, ba_map(prob, q), q);
}

// Jeffreys divergence between Tq and q.
inline double jeffreys_dissipation(const BAProblem& prob, const ProbVec& q) {
    return divergence(Divergence::jeffreys, ba_map(prob, q), q);
}

inline double dual_identity_residual(const BAProblem& prob, const ProbVec& q) {
    return (likelihood_ratio(prob, q).array() - 1.0).abs().maxCoeff();
}

inline double residual_l1(const BAProblem& prob, const ProbVec& q) {
    return divergence(Divergence::l1, ba_map(prob, q), q);
}

// sum_x p(x) K_x K_x^T for the Gibbs kernels at q.
inline Mat gram_matrix(const BAProblem& prob, const ProbVec& q) {
    const GibbsState g = gibbs_state(prob, q);
    const Mat pk = prob.source().values().asDiagonal() * g.kernels;
    Mat c = g.kernels.transpose() * pk;
    return 0.5 * (c + c.transpose());
}

// Jacobian of T on the positive orthant: diag(Psi) - C diag(1/q).
inline Mat analytic_jacobian(const BAProblem& prob, const ProbVec& q) {
    const Vec psi = likelihood_ratio(prob, q);
    const Mat c = gram_matrix(prob, q);
    Mat j = -c * q.values().cwiseInverse().asDiagonal();
    j.diagonal() += psi;
    return j;
}

} // namespace baflow
