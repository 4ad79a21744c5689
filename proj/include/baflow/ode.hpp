#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "error.hpp"

namespace baflow {

// Classical fourth-order Runge-Kutta step for x' = f(x). X needs +, and scalar *.
template <class X, class F>
X rk4_step(const F& f, const X& x, double h) {
    const X k1 = f(x);
    const X k2 = f(x + (0.5 * h) * k1);
    const X k3 = f(x + (0.5 * h) * k2);
    const X k4 = f(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct ScalarSeries {
    std::vector<double> t;
    std::vector<double> s;
};

inline long step_count(double dt, double t_max) {
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(t_max >= dt, "t_max must be at least dt");
    return std::lround(t_max / dt);
}

template <class F>
ScalarSeries integrate_scalar(const F& f, double s0, double dt, double t_max) {
    const long n = step_count(dt, t_max);
    ScalarSeries out;
    out.t.reserve(n + 1);
    out.s.reserve(n + 1);
    double s = s0;
    out.t.push_back(0.0);
    out.s.push_back(s);
    for (long i = 1; i <= n; ++i) {
        s = rk4_step(f, s, dt);
        if (!std::isfinite(s)) throw NumericalError("scalar ODE produced a non-finite value");
        out.t.push_back(double(i) * dt);
        out.s.push_back(s);
    }
    return out;
}

// Least-squares line y = a + b t; returns {b, r^2}.
inline std::pair<double, double> fit_line(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    require(n >= 2 && y.size() == n, "fit_line: need at least two points");
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= double(n);
    my /= double(n);
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(stt > 0.0, "fit_line: degenerate abscissae");
    const double b = sty / stt;
    const double r2 = syy > 0.0 ? (sty * sty) / (stt * syy) : 1.0;
    return {b, r2};
}

} // namespace baflow
