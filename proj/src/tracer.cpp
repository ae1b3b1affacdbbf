#include "pai/tracer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pai {

namespace {

bool in_domain(const DarbouxSystem& sys, const UnfoldingParams& p, double x, double y) {
    C2 z(x, y);
    for (const auto& f : sys.factors)
        if (!(f.poly.eval(z).real() > 0.0)) return false;
    if (!(sys.q.eval(z).real() > 0.0)) return false;
    if (!((sys.q.eval(z).real() + p.eps * sys.r.eval(z).real()) > 0.0)) return false;
    return true;
}

// Newton projection of a real point onto {H = h} along the gradient.
bool project_to_level(const DarbouxSystem& sys, const UnfoldingParams& p,
                      const FirstIntegralModel& model, double h, double x, double y,
                      double tol_rel, double& ox, double& oy, int max_iter = 12) {
    for (int it = 0; it < max_iter; ++it) {
        if (!in_domain(sys, p, x, y)) return false;
        double hv = first_integral(sys, p, C2(x, y));
        double res = hv - h;
        if (std::abs(res) <= tol_rel * h) {
            ox = x;
            oy = y;
            return true;
        }
        C2 th = model.theta(C2(x, y));
        // grad H = H * theta; real here.
        double gx = hv * th.x.real(), gy = hv * th.y.real();
        double g2 = gx * gx + gy * gy;
        if (g2 < 1e-300) return false;
        x -= res * gx / g2;
        y -= res * gy / g2;
    }
    return false;
}

}  // namespace

NestInfo interior_extremum(const DarbouxSystem& sys, const UnfoldingParams& p,
                           const Box& region) {
    const FirstIntegralModel model = first_integral_model(sys, p);
    const int n = 160;
    double best = -std::numeric_limits<double>::infinity();
    double bx = 0, by = 0;
    bool found = false;
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            double x = region.xmin + i * region.width() / n;
            double y = region.ymin + j * region.height() / n;
            if (!in_domain(sys, p, x, y)) continue;
            double hv = first_integral(sys, p, C2(x, y));
            if (hv > best) {
                best = hv;
                bx = x;
                by = y;
                found = true;
            }
        }
    }
    if (!found)
        throw std::runtime_error("interior_extremum: no point of the nest domain in region");

    // Newton on theta = 0 (equivalent to grad H = 0 where H > 0).
    double x = bx, y = by;
    for (int it = 0; it < 80; ++it) {
        C2 z(x, y);
        C2 th = model.theta(z);
        double f1 = th.x.real(), f2 = th.y.real();
        C2 jx = model.theta_jacobian_times(z, C2(1.0, 0.0));
        C2 jy = model.theta_jacobian_times(z, C2(0.0, 1.0));
        double a = jx.x.real(), b = jy.x.real();
        double c = jx.y.real(), d = jy.y.real();
        double det = a * d - b * c;
        if (std::abs(det) < 1e-300) break;
        double dx = (d * f1 - b * f2) / det;
        double dy = (-c * f1 + a * f2) / det;
        double damp = 1.0;
        while (damp > 1e-4 && !in_domain(sys, p, x - damp * dx, y - damp * dy)) damp *= 0.5;
        x -= damp * dx;
        y -= damp * dy;
        if (std::hypot(dx, dy) * damp < 1e-15 * std::max(1.0, std::hypot(x, y))) break;
    }
    if (!in_domain(sys, p, x, y))
        throw std::runtime_error("interior_extremum: Newton left the nest domain");
    C2 th = model.theta(C2(x, y));
    if (norm(th) > 1e-7)
        throw std::runtime_error("interior_extremum: no critical point found (|theta| = " +
                                 std::to_string(norm(th)) + ")");
    NestInfo nest;
    nest.center = C2(x, y);
    nest.b = first_integral(sys, p, nest.center);
    return nest;
}

C2 find_seed(const DarbouxSystem& sys, const UnfoldingParams& p, const NestInfo& nest,
             double h) {
    if (!(h > 0.0)) throw std::domain_error("find_seed: h must be positive");
    if (h > nest.b * (1.0 + 1e-14))
        throw std::domain_error("find_seed: level not bracketed (h > b)");
    if (h >= nest.b * (1.0 - 1e-14)) return nest.center;

    const double cx = nest.center.x.real(), cy = nest.center.y.real();
    // Walk outward along +x until H < h or the domain ends.
    double t_hi = 0.0;
    {
        double step = 1e-3 * std::max(1.0, std::abs(cx));
        double t = step;
        while (true) {
            if (!in_domain(sys, p, cx + t, cy)) {
                // Domain edge reached; H -> 0 there, so bracket ends just inside.
                double lo = t - step, hi = t;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (in_domain(sys, p, cx + mid, cy))
                        lo = mid;
                    else
                        hi = mid;
                }
                t_hi = lo;
                break;
            }
            if (first_integral(sys, p, C2(cx + t, cy)) < h) {
                t_hi = t;
                break;
            }
            step *= 2.0;
            t += step;
        }
    }
    double f_hi = in_domain(sys, p, cx + t_hi, cy)
                      ? first_integral(sys, p, C2(cx + t_hi, cy)) - h
                      : -h;
    if (f_hi > 0.0) throw std::domain_error("find_seed: level not bracketed along ray");

    double lo = 0.0, hi = t_hi;
    double f_lo = nest.b - h;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = first_integral(sys, p, C2(cx + mid, cy)) - h;
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((f_lo > 0) == (fm > 0))
            lo = mid, f_lo = fm;
        else
            hi = mid;
        if (hi - lo < 1e-17 * std::max(1.0, hi)) break;
    }
    double t = 0.5 * (lo + hi);
    // Newton polish along the ray: dH/dt = H * theta_x.
    const FirstIntegralModel model = first_integral_model(sys, p);
    for (int it = 0; it < 8; ++it) {
        double hv = first_integral(sys, p, C2(cx + t, cy));
        double res = hv - h;
        if (std::abs(res) <= 1e-13 * h) break;
        double d = hv * model.theta(C2(cx + t, cy)).x.real();
        if (d == 0.0) break;
        double tn = t - res / d;
        if (tn > lo * 0.5 && tn < hi * 1.5 && in_domain(sys, p, cx + tn, cy)) t = tn;
        else break;
    }
    return C2(cx + t, cy);
}

C2 find_seed(const DarbouxSystem& sys, const UnfoldingParams& p, double h) {
    return find_seed(sys, p, interior_extremum(sys, p), h);
}

Cycle trace_oval(const DarbouxSystem& sys, const UnfoldingParams& p, const NestInfo& nest,
                 double h, const TraceOptions& opt) {
    if (!(h > 0.0) || h >= nest.b)
        throw std::domain_error("trace_oval: h outside (0, b)");
    const FirstIntegralModel model = first_integral_model(sys, p);
    const OneForm mtheta = m_theta_form(sys, p);

    auto tangent = [&](double x, double y, double sign) {
        C2 z(x, y);
        double tx = -mtheta.b.eval(z).real();
        double ty = mtheta.a.eval(z).real();
        double n = std::hypot(tx, ty);
        if (n < 1e-300) throw std::runtime_error("trace_oval: vanishing plane field on oval");
        return std::pair<double, double>{sign * tx / n, sign * ty / n};
    };

    const C2 seed = find_seed(sys, p, nest, h);
    const double cx = nest.center.x.real(), cy = nest.center.y.real();

    // Fix counterclockwise orientation around the center.
    double sign = 1.0;
    {
        auto [tx, ty] = tangent(seed.x.real(), seed.y.real(), 1.0);
        double rx = seed.x.real() - cx, ry = seed.y.real() - cy;
        if (rx * ty - ry * tx < 0.0) sign = -1.0;
    }

    Cycle cyc;
    cyc.level = Complex(h, 0.0);
    cyc.points.push_back(seed);

    const double oval_scale = std::max(norm(seed - nest.center), 1e-8);
    double s = std::min(opt.max_step, 0.05 * oval_scale);
    double x = seed.x.real(), y = seed.y.real();
    auto [tx, ty] = tangent(x, y, sign);
    double turning = 0.0;
    int steps = 0;

    while (true) {
        if (++steps > opt.max_steps)
            throw std::runtime_error("trace_oval: max steps exceeded at h = " + std::to_string(h));
        bool accepted = false;
        double nx = x, ny = y, ntx = tx, nty = ty, dang = 0.0;
        while (!accepted) {
            if (s < opt.step_floor)
                throw std::runtime_error(
                    "trace_oval: step collapse (polycycle regime) at h = " + std::to_string(h));
            // Midpoint predictor along the tangent direction.
            double mx = x + 0.5 * s * tx, my = y + 0.5 * s * ty;
            double px, py;
            try {
                auto [mtx, mty] = tangent(mx, my, sign);
                px = x + s * mtx;
                py = y + s * mty;
            } catch (const std::runtime_error&) {
                s *= 0.5;
                continue;
            }
            double qx, qy;
            if (!project_to_level(sys, p, model, h, px, py, opt.level_tol_rel, qx, qy)) {
                s *= 0.5;
                continue;
            }
            if (std::hypot(qx - px, qy - py) > 0.25 * s) {
                s *= 0.5;
                continue;
            }
            auto [t2x, t2y] = tangent(qx, qy, sign);
            dang = std::atan2(tx * t2y - ty * t2x, tx * t2x + ty * t2y);
            if (std::abs(dang) > 2.5 * opt.target_turn) {
                s *= 0.5;
                continue;
            }
            nx = qx;
            ny = qy;
            ntx = t2x;
            nty = t2y;
            accepted = true;
        }
        const double px_prev = x, py_prev = y;
        x = nx;
        y = ny;
        tx = ntx;
        ty = nty;
        turning += dang;
        cyc.points.push_back(C2(x, y));

        // Closure: the marker or the last segment passes by the seed after a
        // full turn. The segment test catches steps that jump across it.
        if (steps >= opt.min_steps && std::abs(turning) > 1.2 * kPi) {
            double dist_seed = std::hypot(x - seed.x.real(), y - seed.y.real());
            double ex = x - px_prev, ey = y - py_prev;
            double e2 = ex * ex + ey * ey;
            double t_proj = e2 > 0 ? ((seed.x.real() - px_prev) * ex +
                                      (seed.y.real() - py_prev) * ey) / e2
                                   : 0.0;
            t_proj = std::clamp(t_proj, 0.0, 1.0);
            double dseg = std::hypot(px_prev + t_proj * ex - seed.x.real(),
                                     py_prev + t_proj * ey - seed.y.real());
            if (dist_seed < opt.closure_factor * s || dseg < opt.closure_factor * s) {
                if (std::abs(std::abs(turning) - 2.0 * kPi) > 0.5 * kPi)
                    throw std::runtime_error("trace_oval: winding sanity check failed");
                cyc.points.back() = seed;  // exact closure
                cyc.closed = true;
                break;
            }
        }
        if (std::abs(turning) > 2.7 * kPi)
            throw std::runtime_error("trace_oval: failed to close after a full turn");

        // Step-size update from the turning angle.
        if (std::abs(dang) > 1e-12) {
            double want = s * opt.target_turn / std::abs(dang);
            s = std::clamp(want, 0.35 * s, 1.5 * s);
        } else {
            s *= 1.5;
        }
        s = std::min(s, opt.max_step);
    }
    if (cyc.signed_area() < 0.0) cyc.reverse();
    return cyc;
}

Cycle trace_oval(const DarbouxSystem& sys, const UnfoldingParams& p, double h,
                 const TraceOptions& opt) {
    return trace_oval(sys, p, interior_extremum(sys, p), h, opt);
}

}  // namespace pai
