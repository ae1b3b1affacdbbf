#include "pai/darboux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pai {

namespace {

// Q + eps*R
BivariatePoly q_eps(const DarbouxSystem& sys, const UnfoldingParams& p) {
    return sys.q + sys.r * p.eps;
}

}  // namespace

void DarbouxSystem::validate() const {
    if (factors.empty()) throw std::invalid_argument("DarbouxSystem: no factors");
    for (const auto& f : factors) {
        if (f.poly.is_zero())
            throw std::invalid_argument("DarbouxSystem: factor polynomial is zero");
        if (!(f.exponent > 0.0))
            throw std::invalid_argument("DarbouxSystem: factor exponent must be > 0");
    }
    if (q.is_zero()) throw std::invalid_argument("DarbouxSystem: q is zero");
    if (r.is_zero()) throw std::invalid_argument("DarbouxSystem: r is zero");
    if (!(region.xmax > region.xmin) || !(region.ymax > region.ymin))
        throw std::invalid_argument("DarbouxSystem: empty region");
}

std::string DarbouxSystem::to_json() const {
    nlohmann::ordered_json j;
    auto poly_json = [](const BivariatePoly& p) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [k, c] : p.coeffs())
            arr.push_back({k.first, k.second, c});
        return arr;
    };
    j["factors"] = nlohmann::ordered_json::array();
    for (const auto& f : factors)
        j["factors"].push_back({{"poly", poly_json(f.poly)}, {"exponent", f.exponent}});
    j["q"] = poly_json(q);
    j["r"] = poly_json(r);
    j["region"] = {region.xmin, region.xmax, region.ymin, region.ymax};
    return j.dump(2);
}

DarbouxSystem DarbouxSystem::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    auto poly_from = [](const nlohmann::json& arr) {
        BivariatePoly p;
        for (const auto& t : arr)
            p.add_term(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
        return p;
    };
    DarbouxSystem sys;
    for (const auto& f : j.at("factors"))
        sys.factors.push_back({poly_from(f.at("poly")), f.at("exponent").get<double>()});
    sys.q = poly_from(j.at("q"));
    sys.r = poly_from(j.at("r"));
    const auto& reg = j.at("region");
    sys.region = {reg.at(0).get<double>(), reg.at(1).get<double>(),
                  reg.at(2).get<double>(), reg.at(3).get<double>()};
    sys.validate();
    return sys;
}

DarbouxSystem DarbouxSystem::triangle() {
    DarbouxSystem sys;
    sys.factors.push_back({BivariatePoly::var_x(), 1.0});
    sys.factors.push_back({BivariatePoly::var_y(), 1.0});
    BivariatePoly q = BivariatePoly::constant(1.0) - BivariatePoly::var_x() -
                      BivariatePoly::var_y();
    sys.q = q;
    sys.r = BivariatePoly::constant(-1.0);
    sys.region = {-0.1, 1.1, -0.1, 1.1};
    return sys;
}

OneForm OneForm::exact(const BivariatePoly& m_poly, const BivariatePoly& f) {
    return {m_poly * f.dx(), m_poly * f.dy()};
}

// FirstIntegralModel ---------------------------------------------------------

Complex FirstIntegralModel::value_principal(const C2& z) const {
    Complex log_sum{0.0, 0.0};
    for (const auto& t : terms) {
        Complex v = t.poly.eval(z);
        if (v == Complex(0.0, 0.0)) return {0.0, 0.0};  // vanishing factor, a_i > 0
        log_sum += t.exponent * std::log(v);
    }
    if (has_exp_part) {
        Complex den = exp_den.eval(z);
        if (den == Complex(0.0, 0.0))
            throw std::domain_error("FirstIntegralModel: exp-part denominator vanishes");
        log_sum += exp_num.eval(z) / den;
    }
    return std::exp(log_sum);
}

C2 FirstIntegralModel::theta(const C2& z) const {
    C2 th;
    for (const auto& t : terms) {
        Complex v;
        C2 g;
        t.poly.eval_grad(z, v, g);
        if (std::abs(v) == 0.0)
            throw std::domain_error("theta: pole, factor vanishes at evaluation point");
        th += (t.exponent / v) * g;
    }
    if (has_exp_part) {
        Complex qv, rv;
        C2 gq, gr;
        exp_den.eval_grad(z, qv, gq);
        exp_num.eval_grad(z, rv, gr);
        if (std::abs(qv) == 0.0)
            throw std::domain_error("theta: pole, exp-part denominator vanishes");
        // d(R/Q) = (Q dR - R dQ)/Q^2
        th += (1.0 / (qv * qv)) * C2{qv * gr.x - rv * gq.x, qv * gr.y - rv * gq.y};
    }
    return th;
}

C2 FirstIntegralModel::theta_jacobian_times(const C2& z, const C2& d) const {
    // d/dt theta(z + t d) at t=0, per component. theta = sum c grad(f)/f [+ rational].
    // For one log term: J = c*(f * Hess(f) - grad f grad f^T)/f^2.
    C2 out;
    for (const auto& t : terms) {
        Complex v = t.poly.eval(z);
        C2 g = t.poly.grad(z);
        Complex hxx, hxy, hyy;
        t.poly.hessian(z, hxx, hxy, hyy);
        Complex gd = pair_form(g, d);
        Complex hd_x = hxx * d.x + hxy * d.y;
        Complex hd_y = hxy * d.x + hyy * d.y;
        out.x += t.exponent * (hd_x / v - g.x * gd / (v * v));
        out.y += t.exponent * (hd_y / v - g.y * gd / (v * v));
    }
    if (has_exp_part) {
        // d(R/Q) differentiated once more; assemble from component rationals.
        Complex qv = exp_den.eval(z), rv = exp_num.eval(z);
        C2 gq = exp_den.grad(z), gr = exp_num.grad(z);
        Complex qxx, qxy, qyy, rxx, rxy, ryy;
        exp_den.hessian(z, qxx, qxy, qyy);
        exp_num.hessian(z, rxx, rxy, ryy);
        Complex gq_d = pair_form(gq, d), gr_d = pair_form(gr, d);
        auto comp = [&](Complex gr_i, Complex gq_i, Complex hr_d, Complex hq_d) {
            // component of d[(Q dR - R dQ)/Q^2] along d
            Complex num = qv * gr_i - rv * gq_i;
            Complex dnum = gq_d * gr_i + qv * hr_d - gr_d * gq_i - rv * hq_d;
            return dnum / (qv * qv) - 2.0 * num * gq_d / (qv * qv * qv);
        };
        out.x += comp(gr.x, gq.x, rxx * d.x + rxy * d.y, qxx * d.x + qxy * d.y);
        out.y += comp(gr.y, gq.y, rxy * d.x + ryy * d.y, qxy * d.x + qyy * d.y);
    }
    return out;
}

std::vector<Complex> FirstIntegralModel::principal_logs(const C2& z) const {
    std::vector<Complex> logs;
    logs.reserve(terms.size());
    for (const auto& t : terms) {
        Complex v = t.poly.eval(z);
        if (std::abs(v) == 0.0)
            throw std::domain_error("principal_logs: factor vanishes");
        logs.push_back(std::log(v));
    }
    return logs;
}

Complex FirstIntegralModel::value_from_logs(const C2& z, const std::vector<Complex>& logs) const {
    Complex log_sum{0.0, 0.0};
    for (size_t i = 0; i < terms.size(); ++i) log_sum += terms[i].exponent * logs[i];
    if (has_exp_part) log_sum += exp_num.eval(z) / exp_den.eval(z);
    return std::exp(log_sum);
}

double FirstIntegralModel::min_factor_abs(const C2& z) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& t : terms) m = std::min(m, std::abs(t.poly.eval(z)));
    if (has_exp_part) m = std::min(m, std::abs(exp_den.eval(z)));
    return m;
}

int FirstIntegralModel::nearest_factor(const C2& z) const {
    int idx = -1;
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < int(terms.size()); ++i) {
        double v = std::abs(terms[i].poly.eval(z));
        if (v < m) m = v, idx = i;
    }
    if (has_exp_part && std::abs(exp_den.eval(z)) < m) idx = int(terms.size());
    return idx;
}

std::string FirstIntegralModel::factor_name(int index) const {
    if (index < 0) return "none";
    if (index < int(terms.size())) {
        std::ostringstream os;
        os << "factor[" << index << "] = " << terms[index].poly.to_string();
        return os.str();
    }
    return "exp-part denominator " + exp_den.to_string();
}

// Assembly -------------------------------------------------------------------

FirstIntegralModel first_integral_model(const DarbouxSystem& sys, const UnfoldingParams& p) {
    FirstIntegralModel m;
    for (const auto& f : sys.factors) m.terms.push_back({f.poly, f.exponent});
    if (p.eps == 0.0) {
        if (p.alpha != 0.0) m.terms.push_back({sys.q, p.alpha});
        m.has_exp_part = true;
        m.exp_num = sys.r;
        m.exp_den = sys.q;
    } else {
        m.terms.push_back({sys.q, p.alpha - 1.0 / p.eps});
        m.terms.push_back({q_eps(sys, p), 1.0 / p.eps});
    }
    return m;
}

double first_integral(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z) {
    // Real principal branch: all factor values must be positive.
    double log_sum = 0.0;
    auto positive_value = [&](const BivariatePoly& poly, const char* what) {
        double v = poly.eval(z).real();
        if (!(v > 0.0))
            throw std::domain_error(std::string("first_integral: nonpositive factor ") + what);
        return v;
    };
    if (std::abs(z.x.imag()) > 0 || std::abs(z.y.imag()) > 0)
        throw std::domain_error("first_integral: real branch requested at complex point");
    for (const auto& f : sys.factors)
        log_sum += f.exponent * std::log(positive_value(f.poly, "P_i"));
    if (p.eps == 0.0) {
        double qv = positive_value(sys.q, "Q");
        log_sum += p.alpha * std::log(qv);
        log_sum += sys.r.eval(z).real() / qv;
    } else {
        double qv = positive_value(sys.q, "Q");
        double qe = positive_value(q_eps(sys, p), "Q+eps*R");
        log_sum += (p.alpha - 1.0 / p.eps) * std::log(qv) + (1.0 / p.eps) * std::log(qe);
    }
    return std::exp(log_sum);
}

C2 log_derivative_form(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z) {
    return first_integral_model(sys, p).theta(z);
}

Complex integrating_factor(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z) {
    Complex m = sys.q.eval(z) * q_eps(sys, p).eval(z);
    for (const auto& f : sys.factors) m *= f.poly.eval(z);
    return m;
}

BivariatePoly integrating_factor_poly(const DarbouxSystem& sys, const UnfoldingParams& p) {
    BivariatePoly m = sys.q * q_eps(sys, p);
    for (const auto& f : sys.factors) m = m * f.poly;
    return m;
}

OneForm m_theta_form(const DarbouxSystem& sys, const UnfoldingParams& p) {
    // M theta with the 1/eps terms cancelled symbolically; valid at eps = 0 too.
    const BivariatePoly qe = q_eps(sys, p);
    BivariatePoly prod_p = BivariatePoly::constant(1.0);
    for (const auto& f : sys.factors) prod_p = prod_p * f.poly;

    BivariatePoly a, b;
    for (size_t i = 0; i < sys.factors.size(); ++i) {
        BivariatePoly rest = BivariatePoly::constant(sys.factors[i].exponent);
        for (size_t j = 0; j < sys.factors.size(); ++j)
            if (j != i) rest = rest * sys.factors[j].poly;
        BivariatePoly w = sys.q * qe * rest;
        a = a + w * sys.factors[i].poly.dx();
        b = b + w * sys.factors[i].poly.dy();
    }
    BivariatePoly wq = qe * prod_p * p.alpha;
    a = a + wq * sys.q.dx();
    b = b + wq * sys.q.dy();
    // prod P (Q dR - R dQ)
    a = a + prod_p * (sys.q * sys.r.dx() - sys.r * sys.q.dx());
    b = b + prod_p * (sys.q * sys.r.dy() - sys.r * sys.q.dy());
    return {a, b};
}

C2 plane_vector_field(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z) {
    OneForm mt = m_theta_form(sys, p);
    return {-mt.b.eval(z), mt.a.eval(z)};
}

// Genericity -----------------------------------------------------------------

namespace {

// 2D Newton for (f, g) = (0, 0); returns true on convergence.
bool newton2(const BivariatePoly& f, const BivariatePoly& g, double& x, double& y,
             double scale, int max_iter = 60) {
    for (int it = 0; it < max_iter; ++it) {
        C2 z(x, y);
        double fv = f.eval(z).real(), gv = g.eval(z).real();
        C2 gf = f.grad(z), gg = g.grad(z);
        double a = gf.x.real(), b = gf.y.real();
        double c = gg.x.real(), d = gg.y.real();
        double det = a * d - b * c;
        double dx_step, dy_step;
        if (std::abs(det) > 1e-14) {
            dx_step = (d * fv - b * gv) / det;
            dy_step = (-c * fv + a * gv) / det;
        } else {
            // Gradient-descent fallback for (near-)tangential intersections.
            double nf = a * a + b * b, ng = c * c + d * d;
            if (nf < 1e-30 && ng < 1e-30) return false;
            dx_step = (fv * a / std::max(nf, 1e-30) + gv * c / std::max(ng, 1e-30)) * 0.5;
            dy_step = (fv * b / std::max(nf, 1e-30) + gv * d / std::max(ng, 1e-30)) * 0.5;
        }
        x -= dx_step;
        y -= dy_step;
        if (std::abs(fv) + std::abs(gv) < 1e-13 * std::max(1.0, scale) &&
            std::hypot(dx_step, dy_step) < 1e-11 * std::max(1.0, scale))
            return true;
    }
    C2 z(x, y);
    return std::abs(f.eval(z).real()) + std::abs(g.eval(z).real()) < 1e-10 * std::max(1.0, scale);
}

}  // namespace

std::string GenericityReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << ": " << intersections.size() << " intersections, "
       << offences.size() << " offences";
    for (const auto& o : offences)
        os << "\n  [" << o.kind << "] at (" << o.x << ", " << o.y << "): " << o.detail;
    return os.str();
}

GenericityReport check_genericity(const DarbouxSystem& sys, const Box& region,
                                  const GenericityOptions& opt) {
    GenericityReport rep;
    std::vector<BivariatePoly> curves;
    for (const auto& f : sys.factors) curves.push_back(f.poly);
    curves.push_back(sys.q);

    const double hx = region.width() / opt.grid;
    const double hy = region.height() / opt.grid;
    const double scale = region.diameter();

    // Pairwise intersections: Newton from grid cells where both polynomials
    // change sign or are small, then dedupe.
    for (size_t ia = 0; ia < curves.size(); ++ia) {
        for (size_t ib = ia + 1; ib < curves.size(); ++ib) {
            std::vector<std::pair<double, double>> found;
            for (int i = 0; i <= opt.grid; ++i) {
                for (int j = 0; j <= opt.grid; ++j) {
                    double x = region.xmin + i * hx, y = region.ymin + j * hy;
                    C2 z(x, y);
                    double fa = std::abs(curves[ia].eval(z).real());
                    double fb = std::abs(curves[ib].eval(z).real());
                    double cell = std::hypot(hx, hy);
                    double ga = norm(curves[ia].grad(z)), gb = norm(curves[ib].grad(z));
                    if (fa > 2.0 * cell * std::max(ga, 1.0) || fb > 2.0 * cell * std::max(gb, 1.0))
                        continue;
                    double xx = x, yy = y;
                    if (!newton2(curves[ia], curves[ib], xx, yy, scale)) continue;
                    if (!region.contains(xx, yy)) continue;
                    bool dup = false;
                    for (auto& [px, py] : found)
                        if (std::hypot(px - xx, py - yy) < 1e-6 * std::max(1.0, scale)) dup = true;
                    if (dup) continue;
                    found.push_back({xx, yy});
                    C2 zi(xx, yy);
                    C2 ga2 = curves[ia].grad(zi), gb2 = curves[ib].grad(zi);
                    double det = std::abs((ga2.x * gb2.y - ga2.y * gb2.x).real());
                    GenericityReport::Intersection inter;
                    inter.factor_a = int(ia);
                    inter.factor_b = int(ib);
                    inter.x = xx;
                    inter.y = yy;
                    inter.det = det;
                    inter.transversal = det > opt.transversality_tol;
                    rep.intersections.push_back(inter);
                    if (!inter.transversal)
                        rep.offences.push_back({"transversality", xx, yy,
                                                "det(grad,grad) = " + std::to_string(det)});
                }
            }
        }
    }

    // Smoothness: gradient norm bounded below on curve samples. Samples come
    // from sign changes along grid lines refined by bisection.
    for (size_t ic = 0; ic < curves.size(); ++ic) {
        const auto& c = curves[ic];
        auto check_sample = [&](double x, double y) {
            double g = norm(c.grad(C2(x, y)));
            if (g < opt.gradient_tol)
                rep.offences.push_back({"smoothness", x, y,
                                        "gradient norm " + std::to_string(g) + " on curve " +
                                            std::to_string(ic)});
        };
        for (int i = 0; i <= opt.grid; ++i) {
            for (int j = 0; j < opt.grid; ++j) {
                double x = region.xmin + i * hx;
                double y0 = region.ymin + j * hy, y1 = y0 + hy;
                double f0 = c.eval(C2(x, y0)).real(), f1 = c.eval(C2(x, y1)).real();
                if (f0 == 0.0) check_sample(x, y0);
                if (f0 * f1 < 0.0) {
                    for (int it = 0; it < 50; ++it) {
                        double ym = 0.5 * (y0 + y1);
                        double fm = c.eval(C2(x, ym)).real();
                        if (f0 * fm <= 0.0)
                            y1 = ym, f1 = fm;
                        else
                            y0 = ym, f0 = fm;
                    }
                    check_sample(x, 0.5 * (y0 + y1));
                }
            }
        }
    }

    // R^{-1}(0) cap Q^{-1}(0) must be empty in the region: sample Q's zero
    // curve and test |R| there; plus a Newton pass on the (Q, R) pair.
    {
        double min_r_on_q = std::numeric_limits<double>::infinity();
        double worst_x = 0, worst_y = 0;
        int q_samples = 0;
        for (int i = 0; i <= 4 * opt.grid; ++i) {
            double x = region.xmin + i * region.width() / (4.0 * opt.grid);
            double prev_y = region.ymin;
            double prev_q = sys.q.eval(C2(x, prev_y)).real();
            for (int j = 1; j <= 4 * opt.grid; ++j) {
                double y = region.ymin + j * region.height() / (4.0 * opt.grid);
                double qv = sys.q.eval(C2(x, y)).real();
                if (prev_q * qv < 0.0 || qv == 0.0) {
                    double y0 = prev_y, y1 = y, f0 = prev_q;
                    for (int it = 0; it < 50; ++it) {
                        double ym = 0.5 * (y0 + y1);
                        double fm = sys.q.eval(C2(x, ym)).real();
                        if (f0 * fm <= 0.0)
                            y1 = ym;
                        else
                            y0 = ym, f0 = fm;
                    }
                    double yq = 0.5 * (y0 + y1);
                    double rv = std::abs(sys.r.eval(C2(x, yq)).real());
                    ++q_samples;
                    if (rv < min_r_on_q) min_r_on_q = rv, worst_x = x, worst_y = yq;
                }
                prev_y = y;
                prev_q = qv;
            }
        }
        double r_scale = std::max(1e-12, std::abs(sys.r.eval(
            C2(0.5 * (region.xmin + region.xmax), 0.5 * (region.ymin + region.ymax))).real()));
        if (q_samples > 0 && min_r_on_q < opt.gradient_tol * std::max(1.0, r_scale))
            rep.offences.push_back({"rq-intersection", worst_x, worst_y,
                                    "|R| = " + std::to_string(min_r_on_q) + " on Q = 0"});
    }

    rep.pass = rep.offences.empty();
    return rep;
}

}  // namespace pai
