#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace pai {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Point / vector in C^2. Used both for real plane points (zero imaginary
// parts) and for points on complexified level sets.
struct C2 {
    Complex x{0.0, 0.0};
    Complex y{0.0, 0.0};

    C2() = default;
    C2(Complex xx, Complex yy) : x(xx), y(yy) {}
    C2(double xx, double yy) : x(xx, 0.0), y(yy, 0.0) {}

    C2 operator+(const C2& o) const { return {x + o.x, y + o.y}; }
    C2 operator-(const C2& o) const { return {x - o.x, y - o.y}; }
    C2 operator*(Complex s) const { return {x * s, y * s}; }
    C2 operator*(double s) const { return {x * s, y * s}; }
    C2& operator+=(const C2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
};

inline C2 operator*(Complex s, const C2& v) { return v * s; }
inline C2 operator*(double s, const C2& v) { return v * s; }

// Bilinear pairing of a covector with a vector (no conjugation).
inline Complex pair_form(const C2& form, const C2& vec) {
    return form.x * vec.x + form.y * vec.y;
}

inline double norm2(const C2& v) { return std::norm(v.x) + std::norm(v.y); }
inline double norm(const C2& v) { return std::sqrt(norm2(v)); }

inline bool is_real(const C2& v, double tol = 0.0) {
    return std::abs(v.x.imag()) <= tol && std::abs(v.y.imag()) <= tol;
}

// Axis-aligned rectangle [xmin,xmax] x [ymin,ymax].
struct Box {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double diameter() const { return std::hypot(width(), height()); }
    bool contains(double x, double y) const {
        return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
    }
    bool contains(const C2& p, double imag_slack) const {
        return contains(p.x.real(), p.y.real()) &&
               std::abs(p.x.imag()) <= imag_slack &&
               std::abs(p.y.imag()) <= imag_slack;
    }
    Box inflated(double factor) const {
        const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
        const double hw = 0.5 * width() * factor, hh = 0.5 * height() * factor;
        return {cx - hw, cx + hw, cy - hh, cy + hh};
    }
};

inline double sqr(double v) { return v * v; }

}  // namespace pai
