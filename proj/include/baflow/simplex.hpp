#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "error.hpp"

namespace baflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kPositivityFloor = 1e-300;
inline constexpr double kNormTol = 1e-12;

namespace detail {

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void check_dims(Index a, Index b, const char* what) {
    if (a != b)
        throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                              " vs " + std::to_string(b) + ")");
}

} // namespace detail

// Strictly positive distribution on a finite alphabet.
class ProbVec {
public:
    explicit ProbVec(Vec v) : v_(std::move(v)) {
        require(v_.size() >= 2, "ProbVec: dimension must be at least 2");
        require(detail::all_finite(v_), "ProbVec: non-finite entry");
        require(v_.minCoeff() > kPositivityFloor, "ProbVec: entries must be strictly positive");
        require(std::abs(v_.sum() - 1.0) <= kNormTol, "ProbVec: entries must sum to 1");
    }

    // Divides by the sum first; the input still has to be positive.
    static ProbVec normalized(Vec v) {
        require(v.size() >= 2, "ProbVec: dimension must be at least 2");
        require(detail::all_finite(v), "ProbVec: non-finite entry");
        const double s = v.sum();
        require(s > 0.0, "ProbVec: non-positive total mass");
        v /= s;
        return ProbVec(std::move(v));
    }

    static ProbVec uniform(Index n) { return ProbVec(Vec::Constant(n, 1.0 / double(n))); }

    const Vec& values() const { return v_; }
    Index dim() const { return v_.size(); }
    double operator[](Index i) const { return v_[i]; }

private:
    Vec v_;
};

// Zero-sum vector: a direction of motion inside the simplex.
class TangentVec {
public:
    explicit TangentVec(Vec v) : v_(std::move(v)) {
        require(detail::all_finite(v_), "TangentVec: non-finite entry");
        const double scale = std::max(1.0, v_.cwiseAbs().sum());
        require(std::abs(v_.sum()) <= kNormTol * scale, "TangentVec: entries must sum to 0");
    }

    const Vec& values() const { return v_; }
    Index dim() const { return v_.size(); }
    double operator[](Index i) const { return v_[i]; }

private:
    Vec v_;
};

inline TangentVec project_tangent(const Vec& v) {
    if (v.size() == 0) return TangentVec(v);
    return TangentVec((v.array() - v.mean()).matrix());
}

inline ProbVec renormalize(const Vec& v) { return ProbVec::normalized(v); }

inline double fr_inner(const Vec& u, const Vec& v, const Vec& q) {
    detail::check_dims(u.size(), v.size(), "fr_inner");
    detail::check_dims(u.size(), q.size(), "fr_inner");
    require(q.minCoeff() > 0.0, "fr_inner: q must be interior");
    double s = 0.0;
    for (Index i = 0; i < q.size(); ++i) s += u[i] * v[i] / q[i];
    return s;
}

inline double fr_inner(const TangentVec& u, const TangentVec& v, const ProbVec& q) {
    return fr_inner(u.values(), v.values(), q.values());
}

enum class Divergence { chi2, kl, jeffreys, l1, l2 };

inline Divergence parse_divergence(std::string_view s) {
    if (s == "chi2") return Divergence::chi2;
    if (s == "kl") return Divergence::kl;
    if (s == "jeffreys") return Divergence::jeffreys;
    if (s == "l1") return Divergence::l1;
    if (s == "l2") return Divergence::l2;
    throw ValidationError("unknown divergence: " + std::string(s));
}

namespace detail {

inline double kl(const Vec& r, const Vec& q) {
    double s = 0.0;
    for (Index i = 0; i < r.size(); ++i)
        if (r[i] > 0.0) s += r[i] * std::log(r[i] / q[i]);
    return s;
}

} // namespace detail

inline double divergence(Divergence kind, const Vec& r, const Vec& q) {
    detail::check_dims(r.size(), q.size(), "divergence");
    switch (kind) {
    case Divergence::chi2: {
        require(q.minCoeff() > 0.0, "divergence: q must be interior");
        double s = 0.0;
        for (Index i = 0; i < q.size(); ++i) {
            const double u = r[i] - q[i];
            s += u * u / q[i];
        }
        return s;
    }
    case Divergence::kl:
        require(q.minCoeff() > 0.0, "divergence: q must be interior");
        return detail::kl(r, q);
    case Divergence::jeffreys:
        require(q.minCoeff() > 0.0 && r.minCoeff() > 0.0, "divergence: both arguments must be interior");
        return detail::kl(r, q) + detail::kl(q, r);
    case Divergence::l1:
        return (r - q).cwiseAbs().sum();
    case Divergence::l2:
        return (r - q).norm();
    }
    return 0.0;
}

inline double divergence(Divergence kind, const ProbVec& r, const ProbVec& q) {
    return divergence(kind, r.values(), q.values());
}

// Orthonormal basis of {u : sum u = 0}, columns k = 1..n-1 of the Helmert matrix.
inline Mat helmert_basis(Index n) {
    require(n >= 2, "helmert_basis: n must be at least 2");
    Mat b = Mat::Zero(n, n - 1);
    for (Index k = 1; k < n; ++k) {
        const double c = 1.0 / std::sqrt(double(k) * double(k + 1));
        for (Index i = 0; i < k; ++i) b(i, k - 1) = c;
        b(k, k - 1) = -double(k) * c;
    }
    return b;
}

// Orthonormal basis of the complement of w (n x (n-1)), via a Householder reflection.
inline Mat orthogonal_complement(const Vec& w) {
    const Index n = w.size();
    require(n >= 2, "orthogonal_complement: dimension must be at least 2");
    const double nrm = w.norm();
    require(nrm > 0.0, "orthogonal_complement: zero vector");
    Vec v = w / nrm;
    // reflect v onto -sign(v0) e0 to avoid cancellation
    const double s = v[0] >= 0.0 ? 1.0 : -1.0;
    v[0] += s;
    const double vv = v.squaredNorm();
    Mat h = Mat::Identity(n, n) - (2.0 / vv) * v * v.transpose();
    return h.rightCols(n - 1);
}

} // namespace baflow
