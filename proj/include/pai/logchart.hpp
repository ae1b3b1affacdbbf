#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pai/common.hpp"

namespace pai {

// Exact rational arithmetic for the C[u, 1/u, log u] algebra where inputs
// are exact; throws on (very unlikely at the degrees used here) overflow.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n) : num(n), den(1) {}
    Rational(long long n, long long d);

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator-() const { return {-num, den, true}; }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool is_zero() const { return num == 0; }
    double to_double() const { return double(num) / double(den); }

  private:
    Rational(long long n, long long d, bool) : num(n), den(d) {}
};

struct RationalComplex {
    Rational re, im;

    RationalComplex() = default;
    RationalComplex(Rational r) : re(r) {}
    RationalComplex(Rational r, Rational i) : re(r), im(i) {}

    RationalComplex operator+(const RationalComplex& o) const { return {re + o.re, im + o.im}; }
    RationalComplex operator-(const RationalComplex& o) const { return {re - o.re, im - o.im}; }
    RationalComplex operator*(const RationalComplex& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    bool operator==(const RationalComplex& o) const { return re == o.re && im == o.im; }
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    Complex to_complex() const { return {re.to_double(), im.to_double()}; }
};

inline bool coeff_is_zero(const Complex& c) { return c == Complex(0, 0); }
inline bool coeff_is_zero(const RationalComplex& c) { return c.is_zero(); }

// Element of C[u, 1/u, log u]: sparse map (power of u, power of log u) ->
// coefficient. The log power is nonnegative; the u power is any integer.
template <class Coeff>
class LogChartPolyT {
  public:
    using Key = std::pair<int, int>;  // (pow_u, pow_log)
    std::map<Key, Coeff> terms;

    void add_term(int pow_u, int pow_log, const Coeff& c) {
        if (pow_log < 0) throw std::invalid_argument("LogChartPoly: negative log power");
        auto [it, fresh] = terms.try_emplace({pow_u, pow_log}, c);
        if (!fresh) it->second = it->second + c;
        if (coeff_is_zero(it->second)) terms.erase(it);
    }
    bool is_zero() const { return terms.empty(); }
    bool operator==(const LogChartPolyT& o) const { return terms == o.terms; }

    LogChartPolyT operator+(const LogChartPolyT& o) const {
        LogChartPolyT r = *this;
        for (const auto& [k, c] : o.terms) r.add_term(k.first, k.second, c);
        return r;
    }
    LogChartPolyT operator-(const LogChartPolyT& o) const {
        LogChartPolyT r = *this;
        for (const auto& [k, c] : o.terms)
            r.add_term(k.first, k.second, Coeff() - c);
        return r;
    }

    // (u^l log^m u)' = l u^{l-1} log^m u + m u^{l-1} log^{m-1} u.
    LogChartPolyT differentiate() const {
        LogChartPolyT r;
        for (const auto& [k, c] : terms) {
            const auto [l, m] = k;
            if (l != 0) r.add_term(l - 1, m, c * Coeff(l));
            if (m != 0) r.add_term(l - 1, m - 1, c * Coeff(m));
        }
        return r;
    }
};

using LogChartPoly = LogChartPolyT<Complex>;
using ExactLogChartPoly = LogChartPolyT<RationalComplex>;

// Antiderivative in the algebra (no integration constant): exact inverse of
// differentiate by back-substitution over descending log degree.
ExactLogChartPoly integrate_logchart(const ExactLogChartPoly& p);
LogChartPoly integrate_logchart(const LogChartPoly& p);

Complex eval_logchart(const LogChartPoly& p, Complex u);
LogChartPoly scale(const LogChartPoly& p, Complex s);
LogChartPoly to_double_poly(const ExactLogChartPoly& p);

// JSON fixture encoding: list of [pow_u, pow_log, re, im].
std::string logchart_to_json(const LogChartPoly& p);
LogChartPoly logchart_from_json(const std::string& text);

// Functions holomorphic on {Re u < -L}.
struct HalfPlaneFn {
    std::function<Complex(Complex)> eval;
    double L = 5.0;
};

// Delta_a f = f(u + i a pi) - f(u - i a pi); the iterated version expands
// the composition over sign vectors.
Complex delta(const HalfPlaneFn& f, Complex u, double a);
Complex delta_iterated(const HalfPlaneFn& f, Complex u, const std::vector<double>& residues);

// Least-squares decay exponent B of |f| ~ |u|^{-B} along the ray
// u = -t + i k_offset, t geometric in [t_lo, t_hi].
double fit_decay_exponent(const std::function<Complex(Complex)>& f, double t_lo, double t_hi,
                          int n_samples, double k_offset);

// Expansion data for principal-part extraction: coefficients a_{ml} of
// sum a_{ml} log^m u / u^{m+l}, available for m + l <= order.
struct ExpansionFn {
    HalfPlaneFn f;
    std::map<std::pair<int, int>, Complex> coeffs;  // (m, l) -> a_{ml}
    int order = 0;                                  // max trusted m + l
};

struct PrincipalPart {
    LogChartPoly p;         // terms with m + l <= A + 1
    double sampled_bound;   // max |f - p| |u|^A over the test ray
};

// Truncation keeping m + l <= A + 1; throws std::invalid_argument when the
// expansion order is insufficient.
PrincipalPart principal_part(const ExpansionFn& f, double A);

struct DeltaLeading {
    LogChartPoly solution;      // P / (2 pi i a), P the antiderivative
    double input_decay;         // fitted decay exponent of p
    double residual_decay;      // fitted decay exponent of p - Delta_a solution
};

// Leading-term solve of Delta_a F = p: returns P/(2 pi i a) and verifies the
// residual decays one order faster along the test ray.
DeltaLeading solve_delta_leading(const LogChartPoly& p, double a);

struct IteratedSumOptions {
    double decay_A = 3.0;     // assumed |f| <= M |u|^{-A}
    double tol = 1e-10;       // requested tail tolerance
    long max_terms = 1 << 22;
    int initial_cap = 64;
};

struct IteratedSumResult {
    Complex value{0, 0};
    double tail_estimate = 0.0;
    long terms_used = 0;
    int per_index_cap = 0;
};

// F_+/-(u) = (-/+ 1)^k sum_{m_1..m_k > 0} f(u +- 2 pi i <a,m> -/+ pi i sum a).
// Requires decay_A > k; throws std::domain_error otherwise and
// std::runtime_error when the tail tolerance is unreachable.
IteratedSumResult iterated_sum(const HalfPlaneFn& f, const std::vector<double>& residues,
                               int sign, Complex u, const IteratedSumOptions& opt = {});

// F_- - F_+ = sum_{m in Z} f(u + pi i a + 2 pi i a m); 2 pi i a periodic.
// Throws std::runtime_error when the bilateral sum fails to converge.
Complex cochain_difference(const HalfPlaneFn& f, double a, Complex u, double tol = 1e-10);

}  // namespace pai
