#pragma once

#include <random>

#include <baflow/flow.hpp>

namespace baflow::test_support {

// Square problem with zero diagonal and off-diagonal beta*d in [3, 6]; seeds are advanced until
// the fixed point is well inside the simplex. At beta = 0 the costs are taken at beta = 1.
inline BAProblem interior_problem(std::uint64_t seed, Index n, double beta) {
    const double scale = beta > 0.0 ? beta : 1.0;
    for (;; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vec p(n);
        Mat d(n, n);
        for (Index i = 0; i < n; ++i) {
            p[i] = 0.5 + u(rng);
            for (Index j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : (1.0 + u(rng)) * 3.0 / scale;
        }
        BAProblem prob(ProbVec::normalized(p), d, scale);
        try {
            const FixedPointResult fp = ba_fixed_point(prob, ProbVec::uniform(n), 1e-13, 1000000);
            if (fp.converged && fp.q.values().minCoeff() > 0.02) return prob.with_beta(beta);
        } catch (const NumericalError&) {
        }
    }
}

} // namespace baflow::test_support
