#pragma once

#include <functional>
#include <vector>

#include "pai/common.hpp"

namespace pai {

// Dormand-Prince 5(4) embedded pair over a caller-supplied state type.
// State must support: axpy-style combination through the provided ops.
// Two instantiations are used in practice: std::vector<Complex> (marker
// clouds, chart ODEs) and Complex (scalar compensator ODEs).

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-13;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    double max_step = 0.2;
    int max_steps = 2000000;
};

namespace detail {

inline void axpy(double a, const std::vector<Complex>& x, std::vector<Complex>& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}
inline void axpy(double a, const Complex& x, Complex& y) { y += a * x; }

inline double err_norm(const std::vector<Complex>& e, const std::vector<Complex>& y,
                       double rtol, double atol) {
    double m = 0.0;
    for (size_t i = 0; i < e.size(); ++i) {
        double sc = atol + rtol * std::abs(y[i]);
        m = std::max(m, std::abs(e[i]) / sc);
    }
    return m;
}
inline double err_norm(const Complex& e, const Complex& y, double rtol, double atol) {
    return std::abs(e) / (atol + rtol * std::abs(y));
}

}  // namespace detail

// Integrates y' = f(t, y) from t0 to t1 (t real, increasing or decreasing).
// Optional observer is called after each accepted step.
template <class State, class Rhs>
void integrate_ode(Rhs&& f, State& y, double t0, double t1, const OdeOptions& opt = {},
                   const std::function<void(double, const State&)>& observer = nullptr) {
    // Dormand-Prince coefficients.
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    if (span == 0.0) return;
    double t = t0;
    double h = dir * std::min(opt.initial_step, std::min(opt.max_step, span));

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y, err = y;

    int steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > opt.max_steps)
            throw std::runtime_error("integrate_ode: max step count exceeded");
        if (dir * (t + h - t1) > 0.0) h = t1 - t;

        f(t, y, k1);
        ytmp = y;
        detail::axpy(h * a21, k1, ytmp);
        f(t + c2 * h, ytmp, k2);
        ytmp = y;
        detail::axpy(h * a31, k1, ytmp);
        detail::axpy(h * a32, k2, ytmp);
        f(t + c3 * h, ytmp, k3);
        ytmp = y;
        detail::axpy(h * a41, k1, ytmp);
        detail::axpy(h * a42, k2, ytmp);
        detail::axpy(h * a43, k3, ytmp);
        f(t + c4 * h, ytmp, k4);
        ytmp = y;
        detail::axpy(h * a51, k1, ytmp);
        detail::axpy(h * a52, k2, ytmp);
        detail::axpy(h * a53, k3, ytmp);
        detail::axpy(h * a54, k4, ytmp);
        f(t + c5 * h, ytmp, k5);
        ytmp = y;
        detail::axpy(h * a61, k1, ytmp);
        detail::axpy(h * a62, k2, ytmp);
        detail::axpy(h * a63, k3, ytmp);
        detail::axpy(h * a64, k4, ytmp);
        detail::axpy(h * a65, k5, ytmp);
        f(t + h, ytmp, k6);
        ynew = y;
        detail::axpy(h * b1, k1, ynew);
        detail::axpy(h * b3, k3, ynew);
        detail::axpy(h * b4, k4, ynew);
        detail::axpy(h * b5, k5, ynew);
        detail::axpy(h * b6, k6, ynew);
        f(t + h, ynew, k7);

        err = k1;
        {
            // err = h*(e1 k1 + e3 k3 + e4 k4 + e5 k5 + e6 k6 + e7 k7)
            State acc = k1;
            if constexpr (std::is_same_v<State, Complex>) {
                acc = e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7;
                acc *= h;
            } else {
                for (size_t i = 0; i < acc.size(); ++i)
                    acc[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            }
            err = acc;
        }

        double en = detail::err_norm(err, ynew, opt.rtol, opt.atol);
        if (en <= 1.0) {
            t += h;
            y = ynew;
            if (observer) observer(t, y);
        }
        double factor = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
        factor = std::clamp(factor, 0.2, 5.0);
        h *= factor;
        if (std::abs(h) > opt.max_step) h = dir * opt.max_step;
        if (std::abs(h) < opt.min_step) {
            if (en > 1.0)
                throw std::runtime_error("integrate_ode: step size collapsed");
            h = dir * opt.min_step;
        }
    }
}

}  // namespace pai
