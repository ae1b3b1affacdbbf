#include "pai/logchart.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace pai {

namespace {

long long checked_narrow(__int128 v, const char* what) {
    if (v > __int128(std::numeric_limits<long long>::max()) ||
        v < __int128(std::numeric_limits<long long>::min()))
        throw std::overflow_error(std::string("Rational: overflow in ") + what);
    return (long long)v;
}

}  // namespace

Rational::Rational(long long n, long long d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    long long g = std::gcd(n < 0 ? -n : n, d);
    if (g == 0) g = 1;
    num = n / g;
    den = d / g;
}

Rational Rational::operator+(const Rational& o) const {
    __int128 n = __int128(num) * o.den + __int128(o.num) * den;
    __int128 d = __int128(den) * o.den;
    __int128 a = n < 0 ? -n : n;
    __int128 g = 1;
    {
        __int128 x = a, y = d;
        while (y != 0) {
            __int128 t = x % y;
            x = y;
            y = t;
        }
        g = x == 0 ? 1 : x;
    }
    return Rational(checked_narrow(n / g, "+"), checked_narrow(d / g, "+"));
}

Rational Rational::operator-(const Rational& o) const { return *this + (-o); }

Rational Rational::operator*(const Rational& o) const {
    Rational a(num, o.den);   // cross-cancel before multiplying
    Rational b(o.num, den);
    __int128 n = __int128(a.num) * b.num;
    __int128 d = __int128(a.den) * b.den;
    return Rational(checked_narrow(n, "*"), checked_narrow(d, "*"));
}

namespace {

// Shared integration routine: exact for rational coefficients, floating for
// complex ones. The antiderivative of c u^l log^m u for l != -1 is
// sum_j c_j u^{l+1} log^j u with c_m = c/(l+1), c_{j-1} = -j c_j / (l+1);
// for l = -1 it is c log^{m+1} u / (m+1).
template <class Coeff, class DivideInt>
LogChartPolyT<Coeff> integrate_impl(const LogChartPolyT<Coeff>& p, DivideInt div) {
    LogChartPolyT<Coeff> out;
    for (const auto& [k, c] : p.terms) {
        const auto [l, m] = k;
        if (l == -1) {
            out.add_term(0, m + 1, div(c, m + 1));
            continue;
        }
        Coeff cj = div(c, l + 1);
        out.add_term(l + 1, m, cj);
        for (int j = m; j >= 1; --j) {
            cj = div(Coeff() - cj * Coeff(j), l + 1);
            out.add_term(l + 1, j - 1, cj);
        }
    }
    return out;
}

}  // namespace

ExactLogChartPoly integrate_logchart(const ExactLogChartPoly& p) {
    return integrate_impl(p, [](const RationalComplex& c, int d) {
        return c * RationalComplex(Rational(1, d));
    });
}

LogChartPoly integrate_logchart(const LogChartPoly& p) {
    return integrate_impl(p, [](const Complex& c, int d) { return c / double(d); });
}

Complex eval_logchart(const LogChartPoly& p, Complex u) {
    Complex lu = std::log(u);
    Complex s{0, 0};
    for (const auto& [k, c] : p.terms) {
        const auto [l, m] = k;
        Complex term = c;
        term *= std::pow(u, l);
        for (int i = 0; i < m; ++i) term *= lu;
        s += term;
    }
    return s;
}

LogChartPoly scale(const LogChartPoly& p, Complex s) {
    LogChartPoly r;
    for (const auto& [k, c] : p.terms) r.add_term(k.first, k.second, c * s);
    return r;
}

LogChartPoly to_double_poly(const ExactLogChartPoly& p) {
    LogChartPoly r;
    for (const auto& [k, c] : p.terms) r.add_term(k.first, k.second, c.to_complex());
    return r;
}

std::string logchart_to_json(const LogChartPoly& p) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [k, c] : p.terms)
        arr.push_back({k.first, k.second, c.real(), c.imag()});
    return arr.dump();
}

LogChartPoly logchart_from_json(const std::string& text) {
    nlohmann::json arr = nlohmann::json::parse(text);
    LogChartPoly p;
    for (const auto& t : arr)
        p.add_term(t.at(0).get<int>(), t.at(1).get<int>(),
                   Complex(t.at(2).get<double>(), t.at(3).get<double>()));
    return p;
}

Complex delta(const HalfPlaneFn& f, Complex u, double a) {
    Complex up = u + Complex(0.0, a * kPi);
    Complex um = u - Complex(0.0, a * kPi);
    if (up.real() >= -f.L || um.real() >= -f.L)
        throw std::domain_error("delta: shifted point outside the half-plane domain");
    return f.eval(up) - f.eval(um);
}

Complex delta_iterated(const HalfPlaneFn& f, Complex u, const std::vector<double>& residues) {
    const int k = int(residues.size());
    Complex total{0, 0};
    for (int mask = 0; mask < (1 << k); ++mask) {
        double shift = 0.0;
        double sign = 1.0;
        for (int j = 0; j < k; ++j) {
            if (mask & (1 << j)) {
                shift += residues[j];
            } else {
                shift -= residues[j];
                sign = -sign;
            }
        }
        Complex pt = u + Complex(0.0, shift * kPi);
        if (pt.real() >= -f.L)
            throw std::domain_error("delta_iterated: shifted point outside the domain");
        total += sign * f.eval(pt);
    }
    return total;
}

double fit_decay_exponent(const std::function<Complex(Complex)>& f, double t_lo, double t_hi,
                          int n, double k_offset) {
    // Least squares of log|f| against log t; slope is -B.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (int i = 0; i < n; ++i) {
        double t = t_lo * std::pow(t_hi / t_lo, double(i) / (n - 1));
        Complex v = f(Complex(-t, k_offset));
        double av = std::abs(v);
        if (!(av > 0.0) || !std::isfinite(av)) continue;
        double x = std::log(t), y = std::log(av);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    if (used < 3) throw std::runtime_error("fit_decay_exponent: not enough usable samples");
    double slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
    return -slope;
}

PrincipalPart principal_part(const ExpansionFn& f, double A) {
    int needed = int(std::floor(A + 1.0));
    if (f.order < needed)
        throw std::invalid_argument("principal_part: expansion order insufficient for A");
    PrincipalPart out;
    for (const auto& [k, c] : f.coeffs) {
        const auto [m, l] = k;
        if (m + l <= A + 1.0) out.p.add_term(-(m + l), m, c);
    }
    double worst = 0.0;
    const double K = 10.0;
    for (int i = 0; i < 40; ++i) {
        double t = 10.0 * std::pow(1e3, i / 39.0);
        Complex u(-t, K / 2.0);
        Complex r = f.f.eval(u) - eval_logchart(out.p, u);
        worst = std::max(worst, std::abs(r) * std::pow(std::abs(u), A));
    }
    out.sampled_bound = worst;
    return out;
}

DeltaLeading solve_delta_leading(const LogChartPoly& p, double a) {
    DeltaLeading out;
    if (p.is_zero()) {
        out.input_decay = 0.0;
        out.residual_decay = 0.0;
        return out;
    }
    LogChartPoly anti = integrate_logchart(p);
    out.solution = scale(anti, 1.0 / (2.0 * kPi * Complex(0, 1) * a));

    auto p_eval = [&p](Complex u) { return eval_logchart(p, u); };
    out.input_decay = fit_decay_exponent(p_eval, 10.0, 1e4, 48, 5.0);

    HalfPlaneFn sol{[this_poly = out.solution](Complex u) {
                        return eval_logchart(this_poly, u);
                    },
                    0.0};
    double aa = a;
    auto resid = [&p, sol, aa](Complex u) { return eval_logchart(p, u) - delta(sol, u, aa); };
    out.residual_decay = fit_decay_exponent(resid, 10.0, 1e4, 48, 5.0);
    if (out.residual_decay < out.input_decay + 1.0 - 0.1)
        throw std::runtime_error("solve_delta_leading: residual decay gain below one order");
    return out;
}

IteratedSumResult iterated_sum(const HalfPlaneFn& f, const std::vector<double>& residues,
                               int sign, Complex u, const IteratedSumOptions& opt) {
    const int k = int(residues.size());
    if (k < 1) throw std::invalid_argument("iterated_sum: empty residue list");
    for (double a : residues)
        if (!(a > 0.0)) throw std::invalid_argument("iterated_sum: residues must be positive");
    if (!(opt.decay_A > k))
        throw std::domain_error("iterated_sum: divergent, decay order A <= k");
    if (sign != 1 && sign != -1) throw std::invalid_argument("iterated_sum: sign must be +-1");

    const double s = sign;  // +1: F_+, -1: F_-
    double sum_a = 0.0;
    for (double a : residues) sum_a += a;
    const Complex base_shift = Complex(0.0, s * (-kPi) * sum_a);  // -/+ pi i sum a

    const double outer_sign = (k % 2 == 0) ? 1.0 : -s;  // (-/+ 1)^k

    auto partial = [&](int cap, long& terms) {
        Complex acc{0, 0};
        std::vector<int> idx(k, 1);
        while (true) {
            Complex shift = base_shift;
            for (int j = 0; j < k; ++j)
                shift += Complex(0.0, s * 2.0 * kPi * residues[j] * idx[j]);
            acc += f.eval(u + shift);
            ++terms;
            int j = k - 1;
            while (j >= 0) {
                if (++idx[j] <= cap) break;
                idx[j] = 1;
                --j;
            }
            if (j < 0) break;
        }
        return acc;
    };

    int cap = opt.initial_cap;
    long terms = 0;
    Complex prev = partial(cap, terms);
    while (true) {
        if (std::pow(double(2 * cap), k) > double(opt.max_terms))
            throw std::runtime_error("iterated_sum: tail tolerance unreachable within budget");
        long t2 = 0;
        Complex next = partial(2 * cap, t2);
        terms += t2;
        double diff = std::abs(next - prev);
        // Integral-comparison tail: remaining mass beyond cap scales like
        // cap^{k - A}; the doubling difference is a direct estimate of it.
        double tail = diff / std::max(1.0 - std::pow(2.0, double(k) - opt.decay_A), 0.5);
        if (tail < opt.tol) {
            IteratedSumResult out;
            out.value = outer_sign * next;
            out.tail_estimate = tail;
            out.terms_used = terms;
            out.per_index_cap = 2 * cap;
            return out;
        }
        prev = next;
        cap *= 2;
    }
}

Complex cochain_difference(const HalfPlaneFn& f, double a, Complex u, double tol) {
    // sum_{m in Z} f(u + pi i a + 2 pi i a m), adaptive symmetric caps.
    auto term = [&](long m) {
        return f.eval(u + Complex(0.0, kPi * a + 2.0 * kPi * a * double(m)));
    };
    Complex acc = term(0);
    double last_shell = std::abs(acc);
    long cap = 1;
    int stalled = 0;
    while (cap < (1L << 22)) {
        Complex shell{0, 0};
        for (long m = cap / 2 + (cap == 1 ? 0 : 1); m <= cap; ++m) {
            if (cap == 1 && m == 0) continue;
            shell += term(m) + term(-m);
        }
        acc += shell;
        double mag = std::abs(shell);
        if (mag < tol) return acc;
        if (mag >= last_shell) {
            if (++stalled >= 3)
                throw std::runtime_error("cochain_difference: bilateral sum diverges");
        } else {
            stalled = 0;
        }
        last_shell = mag;
        cap *= 2;
    }
    throw std::runtime_error("cochain_difference: tolerance unreachable");
}

}  // namespace pai
