#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ba_core.hpp"

namespace baflow {

inline constexpr double kZeroModeThreshold = 1e-10;

struct GramKernel {
    Mat matrix;
    ProbVec q_star;
};

struct SpectrumReport {
    Vec eigenvalues;   // ascending
    Mat eigenvectors;  // columns, in the coordinates of the tangent basis used
    double gap = 0.0;
    int zero_mode_count = 0;
};

inline void certify_fixed_point(const BAProblem& prob, const ProbVec& q, double tol, const char* what) {
    const double r = dual_identity_residual(prob, q);
    if (!(r <= tol))
        throw ValidationError(std::string(what) + ": q is not a fixed point (residual " + std::to_string(r) +
                              " > " + std::to_string(tol) + ")");
}

inline GramKernel gram_kernel(const BAProblem& prob, const ProbVec& q_star, double certify_tol = 1e-8) {
    certify_fixed_point(prob, q_star, certify_tol, "gram_kernel");
    return {gram_matrix(prob, q_star), q_star};
}

// Symmetric eigensolve of basis^T S basis.
inline SpectrumReport restricted_spectrum(const Mat& s, const Mat& basis) {
    const Mat r = basis.transpose() * s * basis;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (r + r.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolve failed");
    SpectrumReport rep;
    rep.eigenvalues = es.eigenvalues();
    rep.eigenvectors = es.eigenvectors();
    rep.gap = rep.eigenvalues.size() ? rep.eigenvalues[0] : 0.0;
    for (Index i = 0; i < rep.eigenvalues.size(); ++i)
        if (rep.eigenvalues[i] < kZeroModeThreshold) ++rep.zero_mode_count;
    return rep;
}

// Spectrum of a symmetric matrix on the zero-sum hyperplane (Euclidean normalisation).
inline SpectrumReport tangent_spectrum(const Mat& s) { return restricted_spectrum(s, helmert_basis(s.rows())); }

inline SpectrumReport tangent_spectrum(const GramKernel& k) { return tangent_spectrum(k.matrix); }

// Central differences of T with relative steps h*q_j along each coordinate. T has degree 0,
// so the result is the Jacobian on the positive orthant; it acts correctly on tangent vectors.
inline Mat fd_jacobian(const BAProblem& prob, const ProbVec& q, double h = 1e-6) {
    require(h > 0.0 && h < 1.0, "fd_jacobian: relative step must lie in (0,1)");
    detail::check_state(prob, q.values(), "fd_jacobian");
    const Index n = q.dim();
    Mat j(n, n);
    Vec x = q.values();
    for (Index c = 0; c < n; ++c) {
        const double step = h * x[c];
        const double orig = x[c];
        x[c] = orig + step;
        const Vec plus = detail::ba_map_raw(prob, x);
        x[c] = orig - step;
        const Vec minus = detail::ba_map_raw(prob, x);
        x[c] = orig;
        j.col(c) = (plus - minus) / (2.0 * step);
    }
    if (!j.allFinite()) throw NumericalError("fd_jacobian: non-finite entries");
    return j;
}

enum class JacobianMethod { finite_difference, analytic };

struct JacobianSpectrumOptions {
    JacobianMethod method = JacobianMethod::finite_difference;
    double h = 1e-6;
    double symmetry_tol = 1e-8;
    double certify_tol = 1e-8;
};

struct JacobianSpectrum {
    SpectrumReport relaxation; // eigenvalues of -DV(q*) on the tangent space, ascending
    Vec map_eigenvalues;       // matching eigenvalues of DT, 1 - relaxation
    double asymmetry = 0.0;    // max |W - W^T| before symmetrisation
};

// -DV(q*) is self-adjoint in the Fisher-Rao metric; W = D^{-1/2}(I - DT)D^{1/2} is its
// symmetric form, restricted to the complement of sqrt(q*) (the image of the tangent space).
inline JacobianSpectrum jacobian_spectrum(const BAProblem& prob, const ProbVec& q_star,
                                          const JacobianSpectrumOptions& opt = {}) {
    certify_fixed_point(prob, q_star, opt.certify_tol, "jacobian_spectrum");
    const Index n = q_star.dim();
    const Mat jac = opt.method == JacobianMethod::analytic ? analytic_jacobian(prob, q_star)
                                                           : fd_jacobian(prob, q_star, opt.h);
    const Vec sq = q_star.values().cwiseSqrt();
    const Mat a = Mat::Identity(n, n) - jac;
    const Mat w = sq.cwiseInverse().asDiagonal() * a * sq.asDiagonal();
    JacobianSpectrum out;
    out.asymmetry = (w - w.transpose()).cwiseAbs().maxCoeff();
    if (!(out.asymmetry <= opt.symmetry_tol))
        throw NumericalError("jacobian_spectrum: symmetry self-test failed (asymmetry " +
                             std::to_string(out.asymmetry) + ")");
    out.relaxation = restricted_spectrum(0.5 * (w + w.transpose()), orthogonal_complement(sq));
    out.map_eigenvalues = (1.0 - out.relaxation.eigenvalues.array()).matrix();
    return out;
}

// D^{-1/2} C D^{-1/2}: the same operator built from the Gram kernel.
inline SpectrumReport weighted_gram_spectrum(const GramKernel& k) {
    const Vec isq = k.q_star.values().cwiseSqrt().cwiseInverse();
    const Mat w = isq.asDiagonal() * k.matrix * isq.asDiagonal();
    return restricted_spectrum(w, orthogonal_complement(k.q_star.values().cwiseSqrt()));
}

inline Mat random_tangent_frame(Index n, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Mat f(n, count);
    for (int k = 0; k < count; ++k) {
        Vec v(n);
        for (Index i = 0; i < n; ++i) v[i] = nd(rng);
        v.array() -= v.mean();
        f.col(k) = v / v.norm();
    }
    return f;
}

struct HessianReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    double max_asymmetry = 0.0; // of the analytic bilinear form
    double step = 0.0;
    double scale = 0.0;         // largest analytic entry over the frame
    Mat fd;
    Mat analytic;
};

// Second-order central differences of free_energy on a frame of tangent directions (columns),
// against <h1, (I - DT) h2> in the Fisher-Rao metric at q*.
inline HessianReport fr_hessian_check(const BAProblem& prob, const ProbVec& q_star, const Mat& frame,
                                      double h = 1e-4, double certify_tol = 1e-8) {
    certify_fixed_point(prob, q_star, certify_tol, "fr_hessian_check");
    require(frame.rows() == q_star.dim() && frame.cols() >= 1, "fr_hessian_check: bad frame");
    const Vec& q = q_star.values();
    HessianReport r;
    double maxdir = frame.cwiseAbs().maxCoeff();
    r.step = std::min(h, 0.25 * q.minCoeff() / std::max(maxdir, 1e-300));
    const Index n = q.size();
    const Mat a = Mat::Identity(n, n) - fd_jacobian(prob, q_star);
    const int k = int(frame.cols());
    r.fd.resize(k, k);
    r.analytic.resize(k, k);
    auto f = [&](const Vec& x) { return free_energy(prob, ProbVec::normalized(x)); };
    const double s = r.step;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const Vec u = frame.col(i), v = frame.col(j);
            r.fd(i, j) = (f(q + s * u + s * v) - f(q + s * u - s * v) - f(q - s * u + s * v) + f(q - s * u - s * v)) /
                         (4.0 * s * s);
            r.analytic(i, j) = fr_inner(u, Vec(a * v), q);
        }
    }
    r.scale = r.analytic.cwiseAbs().maxCoeff();
    r.max_abs_err = (r.fd - r.analytic).cwiseAbs().maxCoeff();
    r.max_rel_err = r.scale > 0.0 ? r.max_abs_err / r.scale : r.max_abs_err;
    r.max_asymmetry = (r.analytic - r.analytic.transpose()).cwiseAbs().maxCoeff();
    return r;
}

inline HessianReport fr_hessian_check(const BAProblem& prob, const ProbVec& q_star, int n_dirs = 4,
                                      std::uint64_t seed = 0, double h = 1e-4) {
    return fr_hessian_check(prob, q_star, random_tangent_frame(q_star.dim(), n_dirs, seed), h);
}

// (Tq - q) + beta^-1 q (log q - E_q log q)
inline TangentVec fr_gradient_field(const BAProblem& prob, const ProbVec& q) {
    require(prob.beta() > 0.0, "fr_gradient_field: beta must be positive");
    const Vec& qv = q.values();
    const Vec l = qv.array().log().matrix();
    const Vec ent = qv.cwiseProduct((l.array() - qv.dot(l)).matrix()) / prob.beta();
    Vec g = ba_field(prob, q) + ent;
    g.array() -= g.mean(); // roundoff only
    return TangentVec(g);
}

struct FrLinearizationReport {
    double max_abs_err = 0.0;        // vs beta^-1 on the tangent space
    double max_abs_err_exact = 0.0;  // vs the full derivative of the entropic term
    Mat difference;                  // (DG - DV) applied to the Helmert basis
    double beta = 0.0;
};

// Linearisations of the Fisher-Rao gradient field and the BA field at q*, compared on T.
inline FrLinearizationReport fr_linearization_check(const BAProblem& prob, const ProbVec& q_star, double h = 1e-6,
                                                    double certify_tol = 1e-8) {
    certify_fixed_point(prob, q_star, certify_tol, "fr_linearization_check");
    require(prob.beta() > 0.0, "fr_linearization_check: beta must be positive");
    const Index n = q_star.dim();
    const Vec& q = q_star.values();
    const Mat b = helmert_basis(n);
    if (!(q.minCoeff() > 2.0 * h)) throw NumericalError("fr_linearization_check: step leaves the simplex");
    FrLinearizationReport r;
    r.beta = prob.beta();
    r.difference.resize(n, n - 1);
    for (Index k = 0; k < n - 1; ++k) {
        const ProbVec qp(q + h * b.col(k)), qm(q - h * b.col(k));
        const Vec dg = (fr_gradient_field(prob, qp).values() - fr_gradient_field(prob, qm).values()) / (2.0 * h);
        const Vec dv = (ba_field(prob, qp) - ba_field(prob, qm)) / (2.0 * h);
        r.difference.col(k) = dg - dv;
    }
    const Mat expected = b / prob.beta();
    r.max_abs_err = (r.difference - expected).cwiseAbs().maxCoeff();
    const Vec l = q.array().log().matrix();
    const Vec lc = (l.array() - q.dot(l)).matrix();
    const Mat exact = (b + lc.asDiagonal() * b - q * (l.transpose() * b)) / prob.beta();
    r.max_abs_err_exact = (r.difference - exact).cwiseAbs().maxCoeff();
    return r;
}

struct HighTemperatureReference {
    double mu_min = 0.0;
    Mat matrix;
};

// First-order kernel K ~ q_ref (1 - beta dtilde), dtilde centred under q_ref, gives
// lambda* ~ beta^2 mu_min(sum_x p (q_ref . dtilde_x)(q_ref . dtilde_x)^T).
inline HighTemperatureReference high_temperature_reference(const BAProblem& prob,
                                                           const std::optional<ProbVec>& q_ref = std::nullopt) {
    const Index n = prob.dim();
    const ProbVec qr = q_ref ? *q_ref : ProbVec::uniform(n);
    detail::check_dims(qr.dim(), n, "high_temperature_reference");
    const Mat& d = prob.cost();
    const Vec& p = prob.source().values();
    Mat m = Mat::Zero(n, n);
    for (Index x = 0; x < d.rows(); ++x) {
        const Vec row = d.row(x).transpose();
        const Vec v = qr.values().cwiseProduct((row.array() - qr.values().dot(row)).matrix());
        m += p[x] * v * v.transpose();
    }
    return {tangent_spectrum(m).gap, m};
}

} // namespace baflow
