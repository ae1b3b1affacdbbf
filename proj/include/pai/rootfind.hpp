#pragma once

#include <functional>

#include "pai/common.hpp"

namespace pai {

// Safeguarded bracketed root solve (Illinois variant of regula falsi).
// f(a) and f(b) must have opposite signs.
inline double solve_bracketed(const std::function<double(double)>& f, double a, double b,
                              double xtol_rel, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::runtime_error("solve_bracketed: root not bracketed");
    int side = 0;
    double x = a;
    for (int it = 0; it < max_iter; ++it) {
        x = (fa * b - fb * a) / (fa - fb);
        if (!(x > std::min(a, b) && x < std::max(a, b))) x = 0.5 * (a + b);
        double fx = f(x);
        if (fx == 0.0) return x;
        if (fx * fb < 0.0) {
            a = b;
            fa = fb;
            side = 0;
        } else if (side == 1) {
            fa *= 0.5;
        } else {
            side = 1;
        }
        b = x;
        fb = fx;
        if (std::abs(b - a) < xtol_rel * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

// Newton iteration on a scalar complex function with derivative.
// Returns true on convergence.
inline bool newton_complex(const std::function<Complex(Complex)>& f,
                           const std::function<Complex(Complex)>& df, Complex& x,
                           double tol, int max_iter = 60) {
    for (int it = 0; it < max_iter; ++it) {
        Complex fx = f(x);
        Complex d = df(x);
        if (std::abs(d) == 0.0) return false;
        Complex step = fx / d;
        x -= step;
        if (std::abs(step) < tol * std::max(1.0, std::abs(x))) return true;
    }
    return std::abs(f(x)) < tol * 100.0;
}

}  // namespace pai
