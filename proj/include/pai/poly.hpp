#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pai/common.hpp"

namespace pai {

// Sparse bivariate polynomial with real coefficients, evaluated over C.
// Keys are (deg_x, deg_y); stored coefficients are nonzero.
class BivariatePoly {
  public:
    using Key = std::pair<int, int>;
    using CoeffMap = std::map<Key, double>;

    BivariatePoly() = default;
    explicit BivariatePoly(CoeffMap coeffs);
    static BivariatePoly constant(double c);
    static BivariatePoly monomial(int dx, int dy, double c);

    // Named factory helpers for the common generators x and y.
    static BivariatePoly var_x() { return monomial(1, 0, 1.0); }
    static BivariatePoly var_y() { return monomial(0, 1, 1.0); }

    const CoeffMap& coeffs() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }
    int degree() const;  // max total degree, -1 for the zero polynomial
    double coeff(int dx, int dy) const;

    void add_term(int dx, int dy, double c);

    Complex eval(const C2& z) const;
    double eval_real(double x, double y) const;
    // Gradient (dp/dx, dp/dy) evaluated at z.
    C2 grad(const C2& z) const;
    // Value and gradient in one pass over the terms.
    void eval_grad(const C2& z, Complex& value, C2& grad) const;

    BivariatePoly dx() const;
    BivariatePoly dy() const;
    // Second partials, used by Newton on critical points.
    void hessian(const C2& z, Complex& hxx, Complex& hxy, Complex& hyy) const;

    BivariatePoly operator+(const BivariatePoly& o) const;
    BivariatePoly operator-(const BivariatePoly& o) const;
    BivariatePoly operator*(const BivariatePoly& o) const;
    BivariatePoly operator*(double s) const;
    BivariatePoly operator-() const { return *this * -1.0; }

    bool operator==(const BivariatePoly& o) const { return coeffs_ == o.coeffs_; }

    // Serialization as a list of [deg_x, deg_y, coeff] triples.
    std::vector<std::array<double, 3>> to_triples() const;
    static BivariatePoly from_triples(const std::vector<std::array<double, 3>>& t);

    std::string to_string() const;

  private:
    struct FlatTerm {
        int jx, jy;
        double c;
    };
    void prune();
    void ensure_flat() const;
    CoeffMap coeffs_;
    // Contiguous mirror of coeffs_ for the evaluation hot path.
    mutable std::vector<FlatTerm> flat_;
    mutable bool flat_ok_ = false;
    mutable int max_dx_ = 0, max_dy_ = 0;
};

inline BivariatePoly operator*(double s, const BivariatePoly& p) { return p * s; }

}  // namespace pai
