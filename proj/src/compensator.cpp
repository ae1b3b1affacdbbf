#include "pai/compensator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pai/ode.hpp"

namespace pai {

Complex h_tilde(Complex x, double eps, double alpha) {
    if (x == Complex(0, 0)) throw std::domain_error("h_tilde: singular argument x = 0");
    if (eps == 0.0) return std::pow(x, alpha) * std::exp(-1.0 / x);
    if (x == Complex(eps, 0)) throw std::domain_error("h_tilde: singular argument x = eps");
    return std::pow(x, alpha) * std::pow((x - eps) / x, 1.0 / eps);
}

Complex h_tilde_dlog(Complex x, double eps, double alpha) {
    // d log Htilde = alpha/x + 1/(x(x-eps));  the eps = 0 case is alpha/x + 1/x^2.
    return alpha / x + 1.0 / (x * (x - eps));
}

double h_tilde_branch_sup(double eps, double alpha) {
    if (alpha >= 0.0) return std::numeric_limits<double>::infinity();
    double x_star = eps + 1.0 / (-alpha);
    return h_tilde(Complex(x_star, 0.0), eps, alpha).real();
}

double omega_closed_form(double h, double eps) {
    if (!(h > 0.0)) throw std::domain_error("omega_closed_form: h must be positive");
    if (eps == 0.0) return std::log(h);
    return (std::pow(h, eps) - 1.0) / eps;
}

namespace {

double log_h_tilde(double x, double eps, double alpha) {
    return alpha * std::log(x) +
           (eps == 0.0 ? -1.0 / x : (std::log(x - eps) - std::log(x)) / eps);
}

}  // namespace

double omega_root(double h, double eps, double alpha) {
    if (!(h > 0.0) || h > 1.0 + 1e-14)
        throw std::domain_error("omega_root: h must lie in (0, 1]");
    double sup = h_tilde_branch_sup(eps, alpha);
    if (h >= sup)
        throw std::domain_error(
            "omega_root: h beyond the branch fold, no real principal compensator "
            "(sup Htilde = " +
            std::to_string(sup) + ")");
    if (h == 1.0 && alpha == 0.0) return 0.0;

    const double log_h = std::log(h);
    const double x_min = std::max(eps, 0.0);

    // log Htilde is strictly increasing on the principal branch
    // (x_min, x_fold), so bracket and bisect, then polish with Newton.
    double lo = x_min + std::max(1e-3, std::abs(eps));
    while (log_h_tilde(lo, eps, alpha) > log_h) {
        lo = x_min + 0.25 * (lo - x_min);
        if (lo - x_min < 1e-300) throw std::runtime_error("omega_root: bracketing failed (low)");
    }
    double hi;
    if (alpha < 0.0) {
        hi = eps + 1.0 / (-alpha);  // the fold
    } else {
        hi = std::max(2.0 * lo, x_min + 1.0);
        while (log_h_tilde(hi, eps, alpha) < log_h) {
            hi *= 2.0;
            if (hi > 1e300) throw std::runtime_error("omega_root: bracketing failed (high)");
        }
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (log_h_tilde(mid, eps, alpha) < log_h)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        double res = log_h_tilde(x, eps, alpha) - log_h;
        double d = h_tilde_dlog(Complex(x, 0), eps, alpha).real();
        if (d == 0.0) break;
        double xn = x - res / d;
        if (xn > x_min && (alpha >= 0.0 || xn < eps + 1.0 / (-alpha))) x = xn;
        else break;
        if (std::abs(res) < 1e-15) break;
    }
    double omega = -1.0 / x;
    double resid = std::abs(h_tilde(Complex(x, 0), eps, alpha).real() - h);
    if (resid > 1e-12 * h)
        throw std::runtime_error("omega_root: residual " + std::to_string(resid / h) +
                                 " above tolerance");
    return omega;
}

double omega_ode(double h, double h0, double omega0, double eps, double alpha) {
    if (!(h > 0.0) || !(h0 > 0.0)) throw std::domain_error("omega_ode: h must be positive");
    Complex w(omega0, 0.0);
    auto rhs = [eps, alpha](double, const Complex& om, Complex& out) {
        Complex denom = om - alpha * (1.0 + eps * om);
        if (std::abs(denom) < 1e-13 * std::max(1.0, std::abs(om)))
            throw std::runtime_error("omega_ode: singularity encountered (fold)");
        out = om * (1.0 + eps * om) / denom;
    };
    OdeOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-15;
    opt.max_step = 0.05;
    integrate_ode(rhs, w, std::log(h0), std::log(h), opt);
    return w.real();
}

Complex w_exponential(Complex u, double alpha, double min_neg_re) {
    if (!(u.real() < -min_neg_re))
        throw std::domain_error("w_exponential: Re u must be < -L");
    Complex w = -1.0 / u;
    for (int it = 0; it < 60; ++it) {
        Complex res = alpha * std::log(w) - 1.0 / w - u;
        Complex d = alpha / w + 1.0 / (w * w);
        Complex step = res / d;
        w -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(w))) break;
    }
    Complex resid = alpha * std::log(w) - 1.0 / w - u;
    if (std::abs(resid) > 1e-12 * std::max(1.0, std::abs(u)))
        throw std::runtime_error("w_exponential: no convergence");
    return w;
}

namespace {

double integrate_chart_ode(const std::function<void(double, const Complex&, Complex&)>& rhs,
                           Complex y0, double s0, double s1) {
    Complex y = y0;
    OdeOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-15;
    opt.max_step = 0.05;
    integrate_ode(rhs, y, s0, s1, opt);
    return y.real();
}

}  // namespace

double chart_solution(ChartId chart, double eps, double alpha, double u0, double u1,
                      double omega0) {
    if (omega0 == 0.0)
        throw std::domain_error("chart_solution: omega0 = 0 is outside every chart");
    const double w0 = -1.0 / omega0;

    switch (chart) {
        case ChartId::S: {
            if (eps == 0.0)
                throw std::domain_error("chart_solution: S chart degenerates at eps = 0");
            if (std::abs(w0) > 1.0)
                throw std::domain_error("chart_solution: |w| > 1 outside the S chart");
            double y0 = w0 / eps;
            auto rhs = [eps, alpha](double, const Complex& y, Complex& out) {
                Complex denom = 1.0 + eps * alpha * (y - 1.0);
                if (std::abs(denom) < 1e-13)
                    throw std::runtime_error("chart_solution: S chart singularity");
                out = y * (y - 1.0) / denom;
            };
            double y1 = integrate_chart_ode(rhs, Complex(y0, 0), eps * u0, eps * u1);
            if (std::abs(y1) > 2.0 / std::abs(eps))
                throw std::domain_error("chart_solution: left S chart validity region");
            double w1 = eps * y1;
            return -1.0 / w1;
        }
        case ChartId::E: {
            auto rhs = [eps, alpha](double, const Complex& w, Complex& out) {
                Complex denom = 1.0 + alpha * (w - eps);
                if (std::abs(denom) < 1e-13)
                    throw std::runtime_error("chart_solution: E chart singularity");
                out = w * (w - eps) / denom;
            };
            double w1 = integrate_chart_ode(rhs, Complex(w0, 0), u0, u1);
            return -1.0 / w1;
        }
        case ChartId::N: {
            if (alpha == 0.0)
                throw std::domain_error("chart_solution: N chart degenerates at alpha = 0");
            if (std::abs(w0) < 1.0)
                throw std::domain_error("chart_solution: |w| < 1 outside the N chart");
            double z0 = 1.0 / (alpha * w0);
            auto rhs = [eps, alpha](double, const Complex& z, Complex& out) {
                Complex denom = 1.0 + z - alpha * eps * z;
                if (std::abs(denom) < 1e-13)
                    throw std::runtime_error("chart_solution: N chart singularity");
                out = -z * (1.0 - alpha * eps * z) / denom;
            };
            double z1 = integrate_chart_ode(rhs, Complex(z0, 0), u0 / alpha, u1 / alpha);
            double w1 = 1.0 / (alpha * z1);
            return -1.0 / w1;
        }
    }
    throw std::logic_error("chart_solution: unknown chart");
}

ChartId choose_chart(double omega, double eps, double alpha) {
    double w = -1.0 / omega;
    if (eps != 0.0 && std::abs(w) <= 0.5) return ChartId::S;
    if (alpha != 0.0 && std::abs(w) >= 2.0) return ChartId::N;
    return ChartId::E;
}

std::string BijectionReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << ": h -> -1/omega on (0, " << h_sup << "], " << samples
       << " samples, " << violations.size() << " violations";
    return os.str();
}

BijectionReport check_bijection(double eps, double alpha, int samples) {
    BijectionReport rep;
    rep.h_sup = std::min(1.0, h_tilde_branch_sup(eps, alpha));
    rep.samples = samples;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= samples; ++i) {
        double h = rep.h_sup * i / (samples + 0.5);
        double m;
        try {
            m = -1.0 / omega_root(h, eps, alpha);
        } catch (const std::exception&) {
            rep.violations.push_back(h);
            continue;
        }
        if (!(m > prev)) rep.violations.push_back(h);
        prev = m;
    }
    if (rep.h_sup < 1.0) rep.violations.push_back(rep.h_sup);  // not defined up to 1
    rep.pass = rep.violations.empty();
    return rep;
}

}  // namespace pai
