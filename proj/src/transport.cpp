#include "pai/transport.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pai/ode.hpp"

namespace pai {

// HPath -----------------------------------------------------------------------

HPath HPath::spiral(Complex h0, double beta, double kappa) {
    HPath p;
    p.rho = [h0, beta, kappa](double t) {
        return h0 * (1.0 - kappa * t) * std::exp(Complex(0.0, beta * t));
    };
    p.drho = [h0, beta, kappa](double t) {
        Complex e = std::exp(Complex(0.0, beta * t));
        return h0 * e * (Complex(0.0, beta) * (1.0 - kappa * t) - kappa);
    };
    return p;
}

HPath HPath::radial_scale(Complex h0, double ratio) {
    HPath p;
    const double lr = std::log(ratio);
    p.rho = [h0, lr](double t) { return h0 * std::exp(lr * t); };
    p.drho = [h0, lr](double t) { return h0 * lr * std::exp(lr * t); };
    return p;
}

HPath HPath::constant(Complex h0) {
    HPath p;
    p.rho = [h0](double) { return h0; };
    p.drho = [](double) { return Complex(0.0, 0.0); };
    return p;
}

HPath HPath::reversed() const {
    HPath p;
    auto r = rho;
    auto d = drho;
    p.rho = [r](double t) { return r(1.0 - t); };
    p.drho = [d](double t) { return -d(1.0 - t); };
    return p;
}

bool HPath::modulus_decreasing(int samples) const {
    for (int i = 0; i <= samples; ++i) {
        double t = double(i) / samples;
        Complex h = rho(t);
        if (std::abs(h) == 0.0) return false;
        // |rho|' < 0  <=>  Re(conj(rho) rho') < 0
        if (std::real(std::conj(h) * drho(t)) >= 0.0) return false;
    }
    return true;
}

bool HPath::modulus_nonincreasing(int samples) const {
    for (int i = 0; i <= samples; ++i) {
        double t = double(i) / samples;
        Complex h = rho(t);
        if (std::abs(h) == 0.0) return false;
        if (std::real(std::conj(h) * drho(t)) > 1e-14 * std::norm(h)) return false;
    }
    return true;
}

// Continuation core ------------------------------------------------------------

namespace {

struct MarkerCloud {
    std::vector<C2> pts;
    std::vector<std::vector<Complex>> logs;  // per marker, per model log term
};

// Principal log increments of all factors between two nearby points; returns
// false if a factor vanishes or the increment is too large to trust.
bool log_increments(const FirstIntegralModel& model, const C2& from, const C2& to,
                    double max_step, std::vector<Complex>& inc) {
    inc.resize(model.terms.size());
    for (size_t i = 0; i < model.terms.size(); ++i) {
        Complex a = model.terms[i].poly.eval(from);
        Complex b = model.terms[i].poly.eval(to);
        if (a == Complex(0, 0) || b == Complex(0, 0)) return false;
        Complex r = std::log(b / a);
        if (std::abs(r) > max_step) return false;
        inc[i] = r;
    }
    if (model.has_exp_part) {
        if (model.exp_den.eval(to) == Complex(0, 0)) return false;
    }
    return true;
}

Complex log_sum(const FirstIntegralModel& model, const C2& z, const std::vector<Complex>& logs) {
    Complex s{0, 0};
    for (size_t i = 0; i < model.terms.size(); ++i) s += model.terms[i].exponent * logs[i];
    if (model.has_exp_part) s += model.exp_num.eval(z) / model.exp_den.eval(z);
    return s;
}

// Newton projection of one marker onto {H = level}, keeping logs consistent.
bool project_marker(const FirstIntegralModel& model, C2& z, std::vector<Complex>& logs,
                    Complex level, double tol_rel, double grad_floor, int max_iter = 20) {
    Complex target = std::log(level);  // fixed branch; matched below
    {
        // Align the target branch with the current sheet.
        Complex cur = log_sum(model, z, logs);
        double two_pi = 2.0 * kPi;
        double k = std::round((cur.imag() - target.imag()) / two_pi);
        target += Complex(0.0, k * two_pi);
    }
    std::vector<Complex> inc;
    for (int it = 0; it < max_iter; ++it) {
        Complex res = log_sum(model, z, logs) - target;
        if (std::abs(res) <= tol_rel) return true;
        C2 th = model.theta(z);
        double tn2 = norm2(th);
        if (std::sqrt(tn2) * std::abs(level) < grad_floor) return false;
        C2 dir = C2{std::conj(th.x), std::conj(th.y)} * (1.0 / std::sqrt(tn2));
        Complex d = pair_form(th, dir);
        Complex step = -res / d;
        C2 znew = z + step * dir;
        if (!log_increments(model, z, znew, 1.5, inc)) return false;
        for (size_t i = 0; i < inc.size(); ++i) logs[i] += inc[i];
        z = znew;
    }
    return std::abs(log_sum(model, z, logs) - target) <= tol_rel * 10.0;
}

double median_spacing(const std::vector<C2>& pts, bool closed) {
    std::vector<double> sp;
    size_t n = pts.size();
    size_t last = closed ? n : n - 1;
    for (size_t i = 0; i < last; ++i) sp.push_back(norm(pts[(i + 1) % n] - pts[i]));
    std::sort(sp.begin(), sp.end());
    return sp.empty() ? 0.0 : sp[sp.size() / 2];
}

void spacing_extremes(const std::vector<C2>& pts, bool closed, double& mn, double& mx) {
    mn = 1e300;
    mx = 0.0;
    size_t n = pts.size();
    size_t last = closed ? n : n - 1;
    for (size_t i = 0; i < last; ++i) {
        double d = norm(pts[(i + 1) % n] - pts[i]);
        mn = std::min(mn, d);
        mx = std::max(mx, d);
    }
}

// Resample of the cloud; markers are equidistributed in a hybrid metric of
// arc length and the log-change mass  ||theta|| ds, so adjacent markers stay
// branch-trackable even where a factor nearly vanishes (polycycle corners).
// Logs are carried by substepped principal increments from the segment start
// and the marker is reprojected.
bool resample_cloud(const FirstIntegralModel& model, MarkerCloud& cloud, bool closed, int n,
                    Complex level, double tol_rel, double grad_floor, int max_markers = 8192) {
    const size_t m = cloud.pts.size();
    if (m < 3) return false;
    const size_t segs = closed ? m : m - 1;
    std::vector<double> len(segs), mass(segs);
    double len_total = 0.0, mass_total = 0.0;
    for (size_t i = 0; i < segs; ++i) {
        const C2& a = cloud.pts[i];
        const C2& b = cloud.pts[(i + 1) % m];
        len[i] = norm(b - a);
        double th = 0.0;
        try {
            th = norm(model.theta(a + 0.5 * (b - a)));
        } catch (const std::domain_error&) {
            th = norm(model.theta(a));
        }
        mass[i] = len[i] * th;
        len_total += len[i];
        mass_total += mass[i];
    }
    if (len_total == 0.0) return false;

    // Enough markers that adjacent log increments stay around 0.25.
    int want = std::clamp(std::max(n, int(std::ceil(mass_total / 0.25))), 3, max_markers);

    std::vector<double> cum(segs + 1, 0.0);
    for (size_t i = 0; i < segs; ++i)
        cum[i + 1] = cum[i] + len[i] / len_total +
                     (mass_total > 0 ? mass[i] / mass_total : 0.0);
    const double total = cum[segs];

    MarkerCloud out;
    out.pts.reserve(want);
    out.logs.reserve(want);
    std::vector<Complex> inc;
    for (int j = 0; j < want; ++j) {
        double target = closed ? total * j / want : total * j / (want - 1);
        size_t seg = std::upper_bound(cum.begin(), cum.begin() + segs, target) - cum.begin();
        if (seg > 0) --seg;
        if (seg >= segs) seg = segs - 1;
        double denom = cum[seg + 1] - cum[seg];
        double frac = denom > 0 ? (target - cum[seg]) / denom : 0.0;
        const C2& a = cloud.pts[seg];
        const C2& b = cloud.pts[(seg + 1) % m];
        C2 p = a + frac * (b - a);
        // Carry logs from the segment start in substeps small enough for
        // principal increments.
        std::vector<Complex> logs = cloud.logs[seg];
        int sub = 1 + int(std::ceil(mass[seg] / 0.2));
        C2 prev = a;
        bool ok = true;
        for (int ss = 1; ss <= sub && ok; ++ss) {
            C2 cur = a + (frac * ss / sub) * (b - a);
            if (!log_increments(model, prev, cur, 1.5, inc)) {
                ok = false;
                break;
            }
            for (size_t i = 0; i < inc.size(); ++i) logs[i] += inc[i];
            prev = cur;
        }
        if (!ok) return false;
        if (!project_marker(model, p, logs, level, tol_rel, grad_floor)) return false;
        out.pts.push_back(p);
        out.logs.push_back(std::move(logs));
    }
    cloud = std::move(out);
    return true;
}

}  // namespace

Cycle continue_cycle(const FirstIntegralModel& model, const Cycle& cycle, const HPath& path,
                     const Box& domain, const TransportOptions& opt,
                     const TransportObserver& observer) {
    if (cycle.points.size() < 3)
        throw std::invalid_argument("continue_cycle: degenerate cycle");
    Complex level0 = path.rho(0.0);
    if (std::abs(level0 - cycle.level) > 1e-6 * std::abs(level0))
        throw std::invalid_argument("continue_cycle: path start does not match cycle level");

    MarkerCloud cloud;
    cloud.pts = cycle.points;
    if (cycle.closed) cloud.pts.pop_back();  // closed cycles store the seed twice
    if (cycle.has_branch_logs()) {
        cloud.logs = cycle.branch_logs;
        if (cycle.closed) cloud.logs.pop_back();
    } else {
        for (const auto& p : cloud.pts) cloud.logs.push_back(model.principal_logs(p));
    }

    // Initial resample to the requested marker budget.
    int want = opt.markers;
    if (want > 0) {
        want = std::clamp(want, opt.min_markers, opt.max_markers);
        if (!resample_cloud(model, cloud, cycle.closed, want, level0, opt.level_tol_rel,
                            opt.grad_floor, opt.max_markers))
            throw std::runtime_error("continue_cycle: initial resample failed");
    } else {
        for (size_t i = 0; i < cloud.pts.size(); ++i)
            if (!project_marker(model, cloud.pts[i], cloud.logs[i], level0, opt.level_tol_rel,
                                opt.grad_floor))
                throw std::runtime_error("continue_cycle: initial projection failed");
    }

    const Box dom = domain.inflated(opt.domain_inflate);
    const double imag_slack = std::max(domain.diameter(), 1.0) * opt.domain_inflate;

    // Respacing threshold relative to the input distribution, so a cycle kept
    // verbatim (markers = 0) is not resampled until its spacing degrades.
    double trigger_ratio = opt.respace_ratio;
    {
        double mn, mx;
        spacing_extremes(cloud.pts, cycle.closed, mn, mx);
        if (mn > 0.0) trigger_ratio = std::max(opt.respace_ratio, 2.0 * mx / mn);
    }

    std::vector<C2> k1, k2, k3, k4, work;
    std::vector<Complex> inc;

    auto rhs = [&](double t, const std::vector<C2>& pts, std::vector<C2>& out) {
        Complex rho = path.rho(t);
        Complex factor = path.drho(t) / rho;  // lift = conj(theta)/||theta||^2 * (rho'/rho)
        out.resize(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) {
            C2 th = model.theta(pts[i]);
            double tn2 = norm2(th);
            if (std::sqrt(tn2) * std::abs(rho) < opt.grad_floor) {
                int idx = model.nearest_factor(pts[i]);
                throw std::runtime_error("continue_cycle: marker hit critical point near " +
                                         model.factor_name(idx));
            }
            out[i] = C2{std::conj(th.x), std::conj(th.y)} * (factor / tn2);
        }
    };

    double t = 0.0;
    double dt = opt.dt_initial;
    while (t < 1.0) {
        dt = std::min(dt, 1.0 - t);
        if (dt < opt.dt_floor)
            throw std::runtime_error("continue_cycle: step size collapsed (projection diverged)");
        const size_t n = cloud.pts.size();

        bool ok = true;
        // Classic RK4 trial step on the whole cloud.
        std::vector<C2> trial = cloud.pts;
        try {
            rhs(t, cloud.pts, k1);
            work.resize(n);
            for (size_t i = 0; i < n; ++i) work[i] = cloud.pts[i] + (0.5 * dt) * k1[i];
            rhs(t + 0.5 * dt, work, k2);
            for (size_t i = 0; i < n; ++i) work[i] = cloud.pts[i] + (0.5 * dt) * k2[i];
            rhs(t + 0.5 * dt, work, k3);
            for (size_t i = 0; i < n; ++i) work[i] = cloud.pts[i] + dt * k3[i];
            rhs(t + dt, work, k4);
            for (size_t i = 0; i < n; ++i)
                trial[i] = cloud.pts[i] +
                           (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        } catch (const std::runtime_error&) {
            if (dt * 0.5 < opt.dt_floor) throw;
            dt *= 0.5;
            continue;
        }

        // Branch-safety: every factor log increment must stay well under pi.
        std::vector<std::vector<Complex>> new_logs(n);
        double max_inc = 0.0;
        for (size_t i = 0; i < n && ok; ++i) {
            if (!log_increments(model, cloud.pts[i], trial[i], opt.max_log_step, inc)) {
                ok = false;
                break;
            }
            new_logs[i] = cloud.logs[i];
            for (size_t j = 0; j < inc.size(); ++j) {
                new_logs[i][j] += inc[j];
                max_inc = std::max(max_inc, std::abs(inc[j]));
            }
        }
        if (ok) {
            Complex level = path.rho(t + dt);
            for (size_t i = 0; i < n && ok; ++i) {
                if (!project_marker(model, trial[i], new_logs[i], level, opt.level_tol_rel,
                                    opt.grad_floor))
                    ok = false;
            }
            if (ok) {
                for (size_t i = 0; i < n; ++i)
                    if (!dom.contains(trial[i], imag_slack))
                        throw std::runtime_error("continue_cycle: markers left the domain");
                cloud.pts = std::move(trial);
                cloud.logs = std::move(new_logs);
                t += dt;
                if (observer) observer(t, level, cloud.pts);

                double mn, mx;
                spacing_extremes(cloud.pts, cycle.closed, mn, mx);
                if (mx > trigger_ratio * std::max(mn, 1e-300)) {
                    int target = int(cloud.pts.size());
                    double med = median_spacing(cloud.pts, cycle.closed);
                    if (med > 0 && mx > 4.0 * med)
                        target = std::min(opt.max_markers, 2 * target);
                    if (!resample_cloud(model, cloud, cycle.closed, target, level,
                                        opt.level_tol_rel, opt.grad_floor, opt.max_markers))
                        throw std::runtime_error("continue_cycle: resample failed");
                }
                // Step-size adaptation keyed to branch movement.
                if (max_inc < 0.3 * opt.max_log_step) dt = std::min(dt * 1.4, opt.dt_max);
                continue;
            }
        }
        dt *= 0.5;
    }

    Cycle out;
    out.level = path.rho(1.0);
    out.closed = cycle.closed;
    out.points = cloud.pts;
    out.branch_logs = cloud.logs;
    if (cycle.closed) {
        out.points.push_back(out.points.front());
        out.branch_logs.push_back(out.branch_logs.front());
    }
    return out;
}

Cycle continue_cycle(const DarbouxSystem& sys, const UnfoldingParams& p, const Cycle& cycle,
                     const HPath& path, const TransportOptions& opt,
                     const TransportObserver& observer) {
    return continue_cycle(first_integral_model(sys, p), cycle, path, sys.region, opt, observer);
}

C2 lift_tangent(const FirstIntegralModel& model, const C2& point, Complex xi,
                double grad_floor) {
    Complex h = model.value_principal(point);
    C2 th = model.theta(point);
    C2 grad{h * th.x, h * th.y};
    double g2 = norm2(grad);
    if (std::sqrt(g2) < grad_floor)
        throw std::runtime_error("lift_tangent: gradient below threshold near " +
                                 model.factor_name(model.nearest_factor(point)));
    return C2{std::conj(grad.x), std::conj(grad.y)} * (xi / g2);
}

C2 lift_tangent(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& point, Complex xi,
                double grad_floor) {
    return lift_tangent(first_integral_model(sys, p), point, xi, grad_floor);
}

Cycle rotate_level(const DarbouxSystem& sys, const UnfoldingParams& p, const Cycle& cycle,
                   Complex h, double beta, double shrink, const TransportOptions& opt) {
    if (std::abs(h - cycle.level) > 1e-8 * std::abs(h))
        throw std::invalid_argument("rotate_level: cycle is not at level h");
    if (beta == 0.0 && shrink == 0.0) {
        Cycle out = cycle;
        if (!out.has_branch_logs()) {
            FirstIntegralModel model = first_integral_model(sys, p);
            for (const auto& pt : out.points) out.branch_logs.push_back(model.principal_logs(pt));
        }
        return out;
    }
    return continue_cycle(sys, p, cycle, HPath::spiral(h, beta, shrink), opt);
}

// Variation operators ----------------------------------------------------------

namespace {

// One continuation of the real oval to h e^{i beta} (shrink during rotation,
// optional radial restore), then the integral of eta / M over it.
Complex continued_integral(const DarbouxSystem& sys, const UnfoldingParams& p,
                           const OneForm& eta, const Cycle& base, double h, double beta,
                           const VarOptions& opt) {
    if (beta == 0.0) return integrate_form(base, sys, p, eta, opt.quad);
    double kappa = opt.shrink_per_pi * std::abs(beta) / kPi;
    kappa = std::min(kappa, 0.5);
    Cycle rotated = continue_cycle(sys, p, base, HPath::spiral(Complex(h, 0.0), beta, kappa),
                                   opt.transport);
    if (opt.restore_modulus && kappa > 0.0) {
        TransportOptions ropt = opt.transport;
        ropt.markers = 0;  // keep the rotated marker set
        rotated = continue_cycle(sys, p, rotated,
                                 HPath::radial_scale(rotated.level, 1.0 / (1.0 - kappa)), ropt);
    }
    return integrate_form(rotated, sys, p, eta, opt.quad);
}

}  // namespace

Complex var_integral(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, double a, const NestInfo& nest, const VarOptions& opt) {
    Cycle base = trace_oval(sys, p, nest, h);
    Complex plus = continued_integral(sys, p, eta, base, h, a * kPi, opt);
    Complex minus = continued_integral(sys, p, eta, base, h, -a * kPi, opt);
    return plus - minus;
}

Complex var_integral(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, double a) {
    return var_integral(sys, p, eta, h, a, interior_extremum(sys, p));
}

void VarSpec::validate() const {
    if (residues.empty()) throw std::invalid_argument("VarSpec: no residues");
    for (double a : residues)
        if (!(a > 0.0)) throw std::invalid_argument("VarSpec: residues must be positive");
}

Complex iterated_var(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, const VarSpec& spec, const NestInfo& nest, const VarOptions& opt,
                     IteratedVarInfo* info) {
    spec.validate();
    const int k = int(spec.residues.size());

    // Expand the composition into 2^k signed continuations, grouped by total
    // angle (deterministic order, so residue ordering cannot matter).
    std::map<long long, std::pair<double, double>> groups;  // key -> (angle, coeff)
    for (int mask = 0; mask < (1 << k); ++mask) {
        double angle = 0.0;
        double coeff = 1.0;
        for (int j = 0; j < k; ++j) {
            if (mask & (1 << j)) {
                angle += spec.residues[j] * kPi;
            } else {
                angle -= spec.residues[j] * kPi;
                coeff = -coeff;
            }
        }
        long long key = llround(angle * 1e12);
        auto [it, fresh] = groups.try_emplace(key, std::make_pair(angle, coeff));
        if (!fresh) it->second.second += coeff;
    }

    Cycle base = trace_oval(sys, p, nest, h);
    Complex total{0.0, 0.0};
    if (info) {
        info->terms.clear();
        info->cost_warning = k > 4;
    }
    for (const auto& [key, ac] : groups) {
        const auto& [angle, coeff] = ac;
        if (coeff == 0.0) continue;
        Complex v = continued_integral(sys, p, eta, base, h, angle, opt);
        total += coeff * v;
        if (info) info->terms.push_back({angle, coeff, v});
    }
    return total;
}

Complex iterated_var(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, const VarSpec& spec) {
    return iterated_var(sys, p, eta, h, spec, interior_extremum(sys, p));
}

Complex var_of_power(double b, double a, double h) {
    double lh = std::log(h);
    return std::exp(b * Complex(lh, a * kPi)) - std::exp(b * Complex(lh, -a * kPi));
}

// Saddle model ------------------------------------------------------------------

FirstIntegralModel SaddleModel::integral_model() const {
    FirstIntegralModel m;
    m.terms.push_back({BivariatePoly::var_x(), 1.0 / lambda1});
    m.terms.push_back({BivariatePoly::var_y(), 1.0 / lambda2});
    return m;
}

Cycle SaddleModel::leaf_loop(double x0, double y0, int markers) const {
    if (!(x0 > 0.0) || !(y0 > 0.0))
        throw std::invalid_argument("SaddleModel::leaf_loop: x0, y0 must be positive");
    Cycle cyc;
    bool closed = std::abs(lambda1 - std::round(lambda1)) < 1e-12 &&
                  std::abs(lambda2 - std::round(lambda2)) < 1e-12;
    cyc.closed = closed;
    const double lx = std::log(x0), ly = std::log(y0);
    int count = closed ? markers + 1 : markers;
    for (int i = 0; i < count; ++i) {
        double s = 2.0 * kPi * i / markers;
        Complex logx(lx, lambda1 * s), logy(ly, -lambda2 * s);
        cyc.points.push_back(C2{std::exp(logx), std::exp(logy)});
        cyc.branch_logs.push_back({logx, logy});
    }
    cyc.level = std::exp(Complex(lx / lambda1 + ly / lambda2, 0.0));
    return cyc;
}

SaddleTransportReport saddle_model_transport_check(const SaddleModel& model, double h0,
                                                   const HPath& path, double slack,
                                                   const TransportOptions& opt) {
    if (!path.modulus_nonincreasing())
        throw std::invalid_argument("saddle_model_transport_check: path must have |rho|' <= 0");
    // Loop on the leaf {H = h0} with |x|,|y| below 1.
    double x0 = 0.7;
    double y0 = std::pow(h0 / std::pow(x0, 1.0 / model.lambda1), model.lambda2);
    if (y0 > 0.95) {
        // pick x0 to bring y0 inside the bidisc
        x0 = std::pow(h0 / std::pow(0.8, 1.0 / model.lambda2), model.lambda1);
        y0 = 0.8;
    }
    Cycle loop = model.leaf_loop(x0, y0, 256);
    // Align the loop level with the requested h0 (it is by construction).
    FirstIntegralModel fim = model.integral_model();

    SaddleTransportReport rep;
    double max_x = 0.0, max_y = 0.0;
    for (const auto& pt : loop.points) {
        max_x = std::max(max_x, std::abs(pt.x));
        max_y = std::max(max_y, std::abs(pt.y));
    }
    double worst_x = 0.0, worst_y = 0.0;
    auto observer = [&](double, Complex, const std::vector<C2>& pts) {
        double mx = 0.0, my = 0.0;
        for (const auto& pt : pts) {
            mx = std::max(mx, std::abs(pt.x));
            my = std::max(my, std::abs(pt.y));
        }
        worst_x = std::max(worst_x, mx - max_x);
        worst_y = std::max(worst_y, my - max_y);
        max_x = std::min(max_x, mx);  // envelope must be non-increasing
        max_y = std::min(max_y, my);
    };
    TransportOptions topt = opt;
    topt.markers = 0;
    Box bidisc{-1.5, 1.5, -1.5, 1.5};
    Cycle end = continue_cycle(fim, loop, path, bidisc, topt, observer);

    rep.worst_x_increase = worst_x;
    rep.worst_y_increase = worst_y;
    rep.final_level = path.rho(1.0);
    double res = 0.0;
    for (size_t i = 0; i < end.points.size(); ++i) {
        Complex v = std::exp(log_sum(fim, end.points[i], end.branch_logs[i]));
        res = std::max(res, std::abs(v - rep.final_level));
    }
    rep.final_level_residual = res / std::abs(rep.final_level);
    rep.pass = worst_x <= slack && worst_y <= slack && rep.final_level_residual < 1e-9;
    return rep;
}

// Saddle-node model --------------------------------------------------------------

FirstIntegralModel SaddleNodeModel::integral_model() const {
    FirstIntegralModel m;
    m.terms.push_back({BivariatePoly::var_y(), 1.0});
    if (eps == 0.0) {
        if (alpha != 0.0) m.terms.push_back({BivariatePoly::var_x(), alpha});
        m.has_exp_part = true;
        m.exp_num = BivariatePoly::constant(-1.0);
        m.exp_den = BivariatePoly::var_x();
    } else {
        BivariatePoly xp = BivariatePoly::var_x() + BivariatePoly::constant(eps);
        BivariatePoly xm = BivariatePoly::var_x() - BivariatePoly::constant(eps);
        m.terms.push_back({xp, alpha - 0.5 / eps});
        m.terms.push_back({xm, 0.5 / eps});
    }
    return m;
}

Complex SaddleNodeModel::h_tilde_x(Complex x) const {
    if (eps == 0.0) {
        if (x == Complex(0, 0))
            throw std::domain_error("SaddleNodeModel: branch point x = 0");
        return std::pow(x, alpha) * std::exp(-1.0 / x);
    }
    if (x == Complex(eps, 0) || x == Complex(-eps, 0))
        throw std::domain_error("SaddleNodeModel: branch point x = +-eps");
    return std::pow(x + eps, alpha) * std::pow((x - eps) / (x + eps), 0.5 / eps);
}

Complex SaddleNodeModel::first_integral(const C2& point) const {
    return point.y * h_tilde_x(point.x);
}

C2 SaddleNodeModel::field(const C2& point) const {
    return {-point.x * point.x + eps * eps,
            point.y * (1.0 + alpha * (point.x - eps))};
}

Cycle push_from_weak_manifold(const SaddleNodeModel& model, const Cycle& cycle, double delta) {
    if (!(delta > 0.0) || 2.0 * delta >= 1.0)
        throw std::invalid_argument("push_from_weak_manifold: need 0 < delta < 1/2");
    FirstIntegralModel fim = model.integral_model();

    // Small-bidisc precondition: |H~(x)| <= |H~(1)|, |y| <= 1.
    const double ht1 = std::abs(model.h_tilde_x(Complex(1.0, 0.0)));
    double c = 1e300;
    for (const auto& pt : cycle.points) {
        if (std::abs(pt.y) > 1.0 + 1e-9 || std::abs(model.h_tilde_x(pt.x)) > ht1 * (1.0 + 1e-9))
            throw std::domain_error("push_from_weak_manifold: cycle not in the small bidisc");
        c = std::min(c, std::abs(pt.y));
    }
    if (c >= delta) return cycle;  // flow time log(delta/c) <= 0: nothing to do

    const double T = std::log(delta / c);

    // Quintic smoothstep bump: 1 on [0, delta], 0 on [2 delta, inf).
    auto psi = [delta](double r) {
        if (r <= delta) return 1.0;
        if (r >= 2.0 * delta) return 0.0;
        double s = (r - delta) / delta;
        return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    };

    // V = psi (v_y - v_x): xdot = -psi (x^2-eps^2)/(1+alpha(x-eps)), ydot = psi y.
    const size_t n = cycle.points.size();
    std::vector<Complex> state(2 * n);
    for (size_t i = 0; i < n; ++i) {
        state[2 * i] = cycle.points[i].x;
        state[2 * i + 1] = cycle.points[i].y;
    }
    auto rhs = [&](double, const std::vector<Complex>& s, std::vector<Complex>& out) {
        for (size_t i = 0; i < n; ++i) {
            Complex x = s[2 * i], y = s[2 * i + 1];
            double w = psi(std::abs(y));
            Complex denom = 1.0 + model.alpha * (x - model.eps);
            out[2 * i] = -w * (x * x - model.eps * model.eps) / denom;
            out[2 * i + 1] = w * y;
        }
    };
    OdeOptions oopt;
    oopt.rtol = 1e-11;
    oopt.atol = 1e-14;
    oopt.max_step = 0.05;
    integrate_ode(rhs, state, 0.0, T, oopt);

    Cycle out = cycle;
    for (size_t i = 0; i < n; ++i) out.points[i] = C2{state[2 * i], state[2 * i + 1]};
    // Branch logs: re-run the flow per marker with an observer updating the
    // logs by principal increments at every accepted step.
    out.branch_logs.clear();
    if (cycle.has_branch_logs()) {
        std::vector<Complex> inc;
        for (size_t i = 0; i < n; ++i) {
            std::vector<Complex> logs = cycle.branch_logs[i];
            C2 prev = cycle.points[i];
            std::vector<Complex> st = {cycle.points[i].x, cycle.points[i].y};
            auto rhs1 = [&](double, const std::vector<Complex>& s2, std::vector<Complex>& o2) {
                Complex x = s2[0], y = s2[1];
                double w = psi(std::abs(y));
                Complex denom = 1.0 + model.alpha * (x - model.eps);
                o2[0] = -w * (x * x - model.eps * model.eps) / denom;
                o2[1] = w * y;
            };
            bool log_fail = false;
            std::function<void(double, const std::vector<Complex>&)> obs =
                [&](double, const std::vector<Complex>& s2) {
                    C2 cur{s2[0], s2[1]};
                    if (!log_increments(fim, prev, cur, 2.5, inc)) {
                        log_fail = true;
                        return;
                    }
                    for (size_t j = 0; j < inc.size(); ++j) logs[j] += inc[j];
                    prev = cur;
                };
            OdeOptions lopt = oopt;
            lopt.max_step = 0.05;
            integrate_ode(rhs1, st, 0.0, T, lopt, obs);
            if (log_fail)
                throw std::runtime_error("push_from_weak_manifold: branch tracking failed");
            out.branch_logs.push_back(logs);
        }
    }
    return out;
}

}  // namespace pai
