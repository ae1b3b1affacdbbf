#include "pai/integrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <sstream>
#include <thread>

#include "pai/rootfind.hpp"

namespace pai {

namespace {

// 10-point Gauss-Legendre rule on [0, 1].
struct GL10 {
    static constexpr int n = 10;
    double x[n], w[n];
    GL10() {
        static const double xs[5] = {0.1488743389816312, 0.4333953941292472,
                                     0.6794095682990244, 0.8650633666889845,
                                     0.9739065285171717};
        static const double ws[5] = {0.2955242247147529, 0.2692667193099963,
                                     0.2190863625159820, 0.1494513491505806,
                                     0.0666713443086881};
        for (int i = 0; i < 5; ++i) {
            x[2 * i] = 0.5 * (1.0 - xs[i]);
            x[2 * i + 1] = 0.5 * (1.0 + xs[i]);
            w[2 * i] = w[2 * i + 1] = 0.5 * ws[i];
        }
    }
};
const GL10 kGL10;

struct SegmentContext {
    const FirstIntegralModel* model;
    const OneForm* eta;
    const BivariatePoly* m_poly;
    Complex target_log;           // branch-consistent log of the level
    C2 p;                         // segment start marker (on the level set)
    std::vector<Complex> logs_p;  // tracked factor logs at p
    std::vector<Complex> fvals_p; // factor values at p
    C2 chord;                     // q - p
    C2 dir;                       // projection direction
    double level_tol;
};

// Branch-consistent log H at ζ near the segment start: principal increments
// of each factor log from p (valid for short hops), plus the rational part.
Complex log_h_near(const SegmentContext& ctx, const C2& zeta) {
    Complex s{0.0, 0.0};
    const auto& model = *ctx.model;
    for (size_t i = 0; i < model.terms.size(); ++i) {
        Complex fz = model.terms[i].poly.eval(zeta);
        s += model.terms[i].exponent * (ctx.logs_p[i] + std::log(fz / ctx.fvals_p[i]));
    }
    if (model.has_exp_part) s += model.exp_num.eval(zeta) / model.exp_den.eval(zeta);
    return s;
}

// Project chord point p + s*chord onto the level set along dir; returns the
// projected point and the curve tangent dg/ds there.
bool project_node(const SegmentContext& ctx, double s, C2& g, C2& tangent) {
    C2 z = ctx.p + s * ctx.chord;
    Complex t{0.0, 0.0};
    for (int it = 0; it < 14; ++it) {
        C2 zt = z + t * ctx.dir;
        Complex res = log_h_near(ctx, zt) - ctx.target_log;
        if (std::abs(res) <= ctx.level_tol) {
            C2 th = ctx.model->theta(zt);
            Complex dd = pair_form(th, ctx.dir);
            if (std::abs(dd) == 0.0) return false;
            Complex tp = -pair_form(th, ctx.chord) / dd;
            g = zt;
            tangent = ctx.chord + tp * ctx.dir;
            return true;
        }
        C2 th = ctx.model->theta(zt);
        Complex d = pair_form(th, ctx.dir);
        if (std::abs(d) == 0.0) return false;
        t -= res / d;
    }
    return false;
}

Complex integrand(const SegmentContext& ctx, const C2& g, const C2& tangent) {
    Complex m = ctx.m_poly->eval(g);
    return (ctx.eta->a.eval(g) * tangent.x + ctx.eta->b.eval(g) * tangent.y) / m;
}

Complex gl10_on(const SegmentContext& ctx, double s0, double s1, bool& ok) {
    Complex acc{0.0, 0.0};
    for (int i = 0; i < GL10::n; ++i) {
        double s = s0 + (s1 - s0) * kGL10.x[i];
        C2 g, tg;
        if (!project_node(ctx, s, g, tg)) {
            ok = false;
            return acc;
        }
        acc += kGL10.w[i] * integrand(ctx, g, tg);
    }
    ok = true;
    return acc * (s1 - s0);
}

Complex adaptive_segment(const SegmentContext& ctx, double s0, double s1, int depth,
                         const QuadratureOptions& opt, double scale_hint, double& err_out,
                         bool& refined) {
    bool ok_w = false, ok_l = false, ok_r = false;
    Complex whole = gl10_on(ctx, s0, s1, ok_w);
    double mid = 0.5 * (s0 + s1);
    Complex left = gl10_on(ctx, s0, mid, ok_l);
    Complex right = gl10_on(ctx, mid, s1, ok_r);
    if (!ok_w || !ok_l || !ok_r) {
        if (depth >= opt.max_depth)
            throw std::runtime_error("integrate_form: node projection diverged");
        refined = true;
        double e1 = 0, e2 = 0;
        Complex a = adaptive_segment(ctx, s0, mid, depth + 1, opt, scale_hint, e1, refined);
        Complex b = adaptive_segment(ctx, mid, s1, depth + 1, opt, scale_hint, e2, refined);
        err_out = e1 + e2;
        return a + b;
    }
    Complex halves = left + right;
    double err = std::abs(whole - halves);
    double tol = std::max(opt.seg_rel_tol * std::abs(halves), opt.abs_floor * scale_hint);
    if (err <= tol || depth >= opt.max_depth) {
        if (err > tol)
            throw std::runtime_error("integrate_form: tolerance not met on a segment");
        err_out = err;
        return halves;
    }
    refined = true;
    double e1 = 0, e2 = 0;
    Complex a = adaptive_segment(ctx, s0, mid, depth + 1, opt, scale_hint, e1, refined);
    Complex b = adaptive_segment(ctx, mid, s1, depth + 1, opt, scale_hint, e2, refined);
    err_out = e1 + e2;
    return a + b;
}

}  // namespace

Complex integrate_form(const Cycle& cycle, const DarbouxSystem& sys, const UnfoldingParams& p,
                       const OneForm& eta, const QuadratureOptions& opt,
                       QuadratureDiagnostics* diag) {
    if (cycle.points.size() < 3)
        throw std::invalid_argument("integrate_form: degenerate cycle");
    const FirstIntegralModel model = first_integral_model(sys, p);
    const BivariatePoly m_poly = integrating_factor_poly(sys, p);

    // Pole check along the markers.
    double m_max = 0.0;
    for (const auto& pt : cycle.points) m_max = std::max(m_max, std::abs(m_poly.eval(pt)));
    for (const auto& pt : cycle.points)
        if (std::abs(m_poly.eval(pt)) < 1e-13 * m_max)
            throw std::domain_error("integrate_form: integrating factor vanishes on contour");

    // Marker logs: tracked if available, principal otherwise (real ovals).
    std::vector<std::vector<Complex>> logs;
    if (cycle.has_branch_logs()) {
        logs = cycle.branch_logs;
    } else {
        logs.reserve(cycle.points.size());
        for (const auto& pt : cycle.points) logs.push_back(model.principal_logs(pt));
    }

    const size_t n = cycle.points.size();
    const size_t nseg = cycle.closed ? n - 1 : n - 1;  // closed cycles store seed twice

    // First pass: cheap estimate of the cancellation scale.
    double scale_hint = 0.0;
    Complex total{0.0, 0.0};
    double err_total = 0.0;
    int refined_count = 0;

    std::vector<SegmentContext> contexts(nseg);
    for (size_t i = 0; i < nseg; ++i) {
        SegmentContext& ctx = contexts[i];
        ctx.model = &model;
        ctx.eta = &eta;
        ctx.m_poly = &m_poly;
        ctx.p = cycle.points[i];
        ctx.logs_p = logs[i];
        ctx.fvals_p.clear();
        for (const auto& t : model.terms) ctx.fvals_p.push_back(t.poly.eval(ctx.p));
        ctx.chord = cycle.points[i + 1] - cycle.points[i];
        C2 mid = ctx.p + 0.5 * ctx.chord;
        C2 th = model.theta(mid);
        double tn = norm(th);
        if (tn == 0.0) throw std::runtime_error("integrate_form: theta vanishes mid-segment");
        ctx.dir = C2{std::conj(th.x), std::conj(th.y)} * (1.0 / tn);
        ctx.target_log = Complex{0.0, 0.0};
        for (size_t k = 0; k < model.terms.size(); ++k)
            ctx.target_log += model.terms[k].exponent * ctx.logs_p[k];
        if (model.has_exp_part)
            ctx.target_log += model.exp_num.eval(ctx.p) / model.exp_den.eval(ctx.p);
        ctx.level_tol = opt.level_tol_rel;
        bool ok = false;
        Complex rough = gl10_on(ctx, 0.0, 1.0, ok);
        if (ok) scale_hint += std::abs(rough);
    }
    if (scale_hint == 0.0) scale_hint = 1.0;

    double abs_mass = 0.0;
    for (size_t i = 0; i < nseg; ++i) {
        double err = 0.0;
        bool refined = false;
        Complex seg = adaptive_segment(contexts[i], 0.0, 1.0, 0, opt, scale_hint, err, refined);
        total += seg;
        abs_mass += std::abs(seg);
        err_total += err;
        if (refined) ++refined_count;
    }
    if (diag) {
        diag->error_estimate = err_total;
        diag->abs_mass = abs_mass;
        diag->refined_segments = refined_count;
    }
    return total;
}

double pseudo_abelian_integral(const DarbouxSystem& sys, const UnfoldingParams& p,
                               const OneForm& eta, double h, const NestInfo& nest,
                               const TraceOptions& topt, const QuadratureOptions& qopt,
                               double* diag_imag) {
    Cycle cyc = trace_oval(sys, p, nest, h, topt);
    QuadratureDiagnostics diag;
    Complex v = integrate_form(cyc, sys, p, eta, qopt, &diag);
    double scale = std::max(diag.abs_mass, std::abs(v));
    if (diag_imag) *diag_imag = std::abs(v.imag());
    if (std::abs(v.imag()) > 1e-8 * std::max(scale, 1e-300))
        throw std::runtime_error("pseudo_abelian_integral: imaginary part above tolerance");
    return v.real();
}

double pseudo_abelian_integral(const DarbouxSystem& sys, const UnfoldingParams& p,
                               const OneForm& eta, double h) {
    return pseudo_abelian_integral(sys, p, eta, h, interior_extremum(sys, p));
}

std::vector<double> HGridSpec::make() const {
    if (count < 1 || !(h_min > 0.0) || !(h_max > h_min))
        throw std::invalid_argument("HGridSpec: bad grid");
    std::vector<double> hs(count);
    if (count == 1) {
        hs[0] = h_min;
        return hs;
    }
    for (int i = 0; i < count; ++i) {
        double t = double(i) / (count - 1);
        hs[i] = log_spaced ? h_min * std::pow(h_max / h_min, t)
                           : h_min + t * (h_max - h_min);
    }
    return hs;
}

std::string SweepResult::to_csv() const {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# eps=%.17g alpha=%.17g min_reachable_h=%.17g\n",
                  params.eps, params.alpha, min_reachable_h);
    os << buf << "h,i_re,i_im,err_estimate\n";
    for (size_t i = 0; i < h_samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", h_samples[i],
                      i_values[i].real(), i_values[i].imag(), diagnostics[i]);
        os << buf;
    }
    return os.str();
}

std::string SweepResult::zeros_json() const {
    std::ostringstream os;
    os << "{\"zeros\":[";
    for (size_t i = 0; i < zeros.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", zeros[i]);
        os << (i ? "," : "") << buf;
    }
    os << "],\"count\":" << zeros.size() << ",\"failed_samples\":" << failed_samples << "}";
    return os.str();
}

SweepResult sweep(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                  const HGridSpec& grid, const SweepOptions& opt) {
    const NestInfo nest = interior_extremum(sys, p);
    SweepResult out;
    out.params = p;
    std::vector<double> hs = grid.make();

    struct Sample {
        double h = 0;
        Complex v{0, 0};
        double err = 0;
        double abs_mass = 0;
        bool ok = false;
    };
    std::vector<Sample> samples(hs.size());

    auto eval_one = [&](size_t i) {
        samples[i].h = hs[i];
        try {
            Cycle cyc = trace_oval(sys, p, nest, hs[i], opt.trace);
            QuadratureDiagnostics d;
            samples[i].v = integrate_form(cyc, sys, p, eta, opt.quad, &d);
            samples[i].err = d.error_estimate;
            samples[i].abs_mass = d.abs_mass;
            samples[i].ok = true;
        } catch (const std::runtime_error&) {
            samples[i].ok = false;  // polycycle regime: reported, not extrapolated
        }
    };

    if (opt.jobs > 1) {
        std::vector<std::future<void>> futs;
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            size_t i;
            while ((i = next.fetch_add(1)) < hs.size()) eval_one(i);
        };
        for (int t = 0; t < opt.jobs; ++t)
            futs.push_back(std::async(std::launch::async, worker));
        for (auto& f : futs) f.get();
    } else {
        for (size_t i = 0; i < hs.size(); ++i) eval_one(i);
    }

    out.min_reachable_h = 0.0;
    for (const auto& s : samples) {
        if (!s.ok) {
            ++out.failed_samples;
            continue;
        }
        if (out.h_samples.empty()) out.min_reachable_h = s.h;
        out.h_samples.push_back(s.h);
        out.i_values.push_back(s.v);
        out.diagnostics.push_back(s.err);
    }
    if (out.h_samples.empty()) throw std::runtime_error("sweep: no reachable h samples");

    double mag = 0.0, mass = 0.0;
    for (const auto& v : out.i_values) mag = std::max(mag, std::abs(v));
    for (const auto& s : samples)
        if (s.ok) mass = std::max(mass, s.abs_mass);
    out.magnitude = mag;
    // The quadrature cancellation mass sets the noise floor: an identically
    // zero integral has |I| at roundoff of the per-segment magnitudes, so a
    // threshold relative to max|I| alone would count noise crossings.
    const double zero_floor = std::max(opt.zero_rel_threshold * mag, 1e-12 * mass);

    // Sign changes of Re I between consecutive non-negligible samples.
    auto value_at = [&](double h) {
        return pseudo_abelian_integral(sys, p, eta, h, nest, opt.trace, opt.quad);
    };
    int last_sign = 0;
    double last_h = 0.0;
    for (size_t i = 0; i < out.h_samples.size(); ++i) {
        double v = out.i_values[i].real();
        if (std::abs(v) <= zero_floor) continue;  // numerically zero: not a sign datum
        int sign = v > 0 ? 1 : -1;
        if (last_sign != 0 && sign != last_sign) {
            double z = solve_bracketed(
                [&](double h) { return value_at(h); }, last_h, out.h_samples[i],
                opt.zero_refine_rel);
            out.zeros.push_back(z);
        }
        last_sign = sign;
        last_h = out.h_samples[i];
    }
    return out;
}

}  // namespace pai
