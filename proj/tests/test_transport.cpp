#include <random>

#include "doctest.h"
#include "pai/transport.hpp"

using namespace pai;

namespace {

struct Fixture {
    DarbouxSystem sys = DarbouxSystem::triangle();
    UnfoldingParams p{0.0, 0.0};
    NestInfo nest;
    FirstIntegralModel model;
    Fixture() : nest(interior_extremum(sys, p)), model(first_integral_model(sys, p)) {}
};

double max_level_residual(const FirstIntegralModel& model, const Cycle& cyc) {
    double worst = 0.0;
    for (size_t i = 0; i < cyc.points.size(); ++i) {
        Complex v = model.value_from_logs(cyc.points[i], cyc.branch_logs[i]);
        worst = std::max(worst, std::abs(v - cyc.level));
    }
    return worst / std::abs(cyc.level);
}

double dist_to_polyline(const Cycle& cyc, const C2& pt) {
    double best = 1e300;
    size_t n = cyc.points.size();
    for (size_t i = 0; i + 1 < n; ++i) {
        C2 a = cyc.points[i], e = cyc.points[i + 1] - cyc.points[i];
        double e2 = norm2(e);
        Complex num = std::conj(e.x) * (pt.x - a.x) + std::conj(e.y) * (pt.y - a.y);
        double t = e2 > 0 ? std::clamp(num.real() / e2, 0.0, 1.0) : 0.0;
        best = std::min(best, norm(pt - (a + t * e)));
    }
    return best;
}

}  // namespace

TEST_CASE("lift_tangent: contract and special values") {
    Fixture f;
    // xi = 0 gives the zero vector.
    C2 v0 = lift_tangent(f.sys, f.p, C2(0.3, 0.2), Complex(0.0, 0.0));
    CHECK(norm(v0) == 0.0);

    // H = x y at (1,1), xi = 1 -> (1/2, 1/2).
    SaddleModel saddle{1.0, 1.0};
    C2 v = lift_tangent(saddle.integral_model(), C2(1.0, 1.0), Complex(1.0, 0.0));
    CHECK(std::abs(v.x - Complex(0.5, 0.0)) < 1e-14);
    CHECK(std::abs(v.y - Complex(0.5, 0.0)) < 1e-14);

    // dH(lift(xi)) = xi at random points.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.05, 0.45);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        double x = u(rng), y = u(rng);
        if (x + y > 0.9) continue;
        Complex xi(c(rng), c(rng));
        C2 lift = lift_tangent(f.sys, f.p, C2(x, y), xi);
        double h = first_integral(f.sys, f.p, C2(x, y));
        C2 th = f.model.theta(C2(x, y));
        Complex back = h * pair_form(th, lift);  // dH(lift)
        CHECK(std::abs(back - xi) <= 1e-12 * std::max(1.0, std::abs(xi)));
    }

    // Critical point error at the nest center.
    CHECK_THROWS_AS(lift_tangent(f.sys, f.p, f.nest.center, Complex(1.0, 0.0), 1e-9),
                    std::runtime_error);
}

TEST_CASE("continue_cycle: constant path is the identity") {
    Fixture f;
    Cycle cyc = trace_oval(f.sys, f.p, f.nest, f.nest.b / 2.0);
    TransportOptions opt;
    opt.markers = 0;
    Cycle out = continue_cycle(f.sys, f.p, cyc, HPath::constant(cyc.level), opt);
    REQUIRE(out.points.size() == cyc.points.size());
    CHECK(Cycle::max_pointwise_distance(out, cyc) < 1e-9);
}

TEST_CASE("continue_cycle along real decreasing h matches direct tracing") {
    Fixture f;
    double h1 = 0.6 * f.nest.b, h2 = 0.25 * f.nest.b;
    Cycle start = trace_oval(f.sys, f.p, f.nest, h1);
    Cycle moved = continue_cycle(f.sys, f.p, start, HPath::radial_scale(Complex(h1, 0), h2 / h1));
    CHECK(std::abs(moved.level - Complex(h2, 0.0)) < 1e-12 * h2);
    CHECK(max_level_residual(f.model, moved) < 1e-9);

    // Transverse distance from each marker to the real oval {H = h2}:
    // |H - h2| / ||grad H||. The markers must also stay real.
    for (const auto& pt : moved.points) {
        CHECK(std::abs(pt.x.imag()) < 1e-9);
        CHECK(std::abs(pt.y.imag()) < 1e-9);
        C2 zr(pt.x.real(), pt.y.real());
        double hv = first_integral(f.sys, f.p, zr);
        double gn = hv * norm(f.model.theta(zr));
        CHECK(std::abs(hv - h2) / gn < 1e-6);
    }

    // And the marker cloud lands on the directly traced curve up to the
    // polyline discretization of the reference trace.
    TraceOptions fine;
    fine.max_step = 0.002;
    fine.target_turn = 0.01;
    Cycle direct = trace_oval(f.sys, f.p, f.nest, h2, fine);
    double worst = 0.0;
    for (const auto& pt : moved.points) worst = std::max(worst, dist_to_polyline(direct, pt));
    CHECK(worst < 3e-5);
}

TEST_CASE("path reversal returns the cycle") {
    Fixture f;
    Cycle base = trace_oval(f.sys, f.p, f.nest, f.nest.b / 2.0);
    // Resample once so both legs keep the same marker set.
    TransportOptions fix;
    fix.markers = 300;
    Cycle r0 = continue_cycle(f.sys, f.p, base, HPath::constant(base.level), fix);
    TransportOptions keep;
    keep.markers = 0;
    keep.respace_ratio = 1e9;  // keep marker identity for the pointwise comparison
    HPath path = HPath::spiral(r0.level, 0.6 * kPi, 0.12);
    Cycle there = continue_cycle(f.sys, f.p, r0, path, keep);
    Cycle back = continue_cycle(f.sys, f.p, there, path.reversed(), keep);
    CHECK(Cycle::max_pointwise_distance(back, r0) < 1e-6);
    CHECK(max_level_residual(f.model, back) < 1e-9);
}

TEST_CASE("homotopic paths produce the same integrals") {
    Fixture f;
    OneForm eta{BivariatePoly::var_y(), BivariatePoly()};
    double h = f.nest.b / 2.0;
    Cycle base = trace_oval(f.sys, f.p, f.nest, h);

    // Path A: spiral rotation by pi with shrink 0.1.
    Cycle a = continue_cycle(f.sys, f.p, base, HPath::spiral(Complex(h, 0), kPi, 0.1));
    // Path B: radial shrink, then pure rotation.
    Cycle b1 = continue_cycle(f.sys, f.p, base, HPath::radial_scale(Complex(h, 0), 0.9));
    Cycle b = continue_cycle(f.sys, f.p, b1, HPath::spiral(b1.level, kPi, 0.0));
    CHECK(std::abs(a.level - b.level) < 1e-10 * std::abs(a.level));

    Complex ia = integrate_form(a, f.sys, f.p, eta);
    Complex ib = integrate_form(b, f.sys, f.p, eta);
    CHECK(std::abs(ia - ib) < 1e-8 * std::max(std::abs(ia), 1e-12));
}

TEST_CASE("rotate_level: identity and full-turn periodicity on the saddle model") {
    Fixture f;
    Cycle cyc = trace_oval(f.sys, f.p, f.nest, f.nest.b / 2.0);
    Cycle same = rotate_level(f.sys, f.p, cyc, cyc.level, 0.0, 0.0);
    CHECK(Cycle::max_pointwise_distance(same, cyc) == 0.0);

    // Saddle model with integer 1/lambda: rotating the level by 2 pi carries
    // the vanishing-cycle loop into itself as a set.
    SaddleModel saddle{1.0, 1.0};
    FirstIntegralModel m = saddle.integral_model();
    Cycle loop = saddle.leaf_loop(0.5, 0.5, 200);
    TransportOptions opt;
    opt.markers = 0;
    Box bidisc{-1.5, 1.5, -1.5, 1.5};
    Cycle turned = continue_cycle(m, loop, HPath::spiral(loop.level, 2.0 * kPi, 0.0), bidisc, opt);
    double worst = 0.0;
    for (const auto& pt : turned.points) worst = std::max(worst, dist_to_polyline(loop, pt));
    CHECK(worst < 1e-6);
    CHECK(max_level_residual(m, turned) < 1e-9);
}

TEST_CASE("var_integral of an exact form vanishes") {
    Fixture f;
    BivariatePoly mp = integrating_factor_poly(f.sys, f.p);
    OneForm eta = OneForm::exact(mp, BivariatePoly::var_x() * BivariatePoly::var_y());
    double h = f.nest.b / 2.0;
    Complex var = var_integral(f.sys, f.p, eta, h, 1.0, f.nest);
    Cycle base = trace_oval(f.sys, f.p, f.nest, h);
    CHECK(std::abs(var) < 1e-7 * base.length());
}

TEST_CASE("scalar variation of h^b") {
    for (double b : {0.5, 1.0, 2.3}) {
        for (double a : {0.3, 1.0, 1.7}) {
            Complex got = var_of_power(b, a, 0.37);
            Complex want = 2.0 * Complex(0.0, 1.0) * std::sin(kPi * a * b) * std::pow(0.37, b);
            CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("Schwarz reflection: the two var legs are conjugate") {
    Fixture f;
    OneForm eta{BivariatePoly::var_y(), BivariatePoly()};
    double h = f.nest.b / 2.0, a = 1.0;
    Cycle base = trace_oval(f.sys, f.p, f.nest, h);
    VarOptions vopt;
    Complex var = var_integral(f.sys, f.p, eta, h, a, f.nest, vopt);
    // I real-analytic on (0,b) with real eta: I(h e^{-i a pi}) = conj(I(h e^{i a pi})),
    // so Var is purely imaginary.
    CHECK(std::abs(var.real()) < 1e-8 * std::max(std::abs(var), 1e-12));
}

TEST_CASE("iterated_var: k = 1 reduces to var_integral; order independence") {
    Fixture f;
    OneForm eta{BivariatePoly::var_y(), BivariatePoly()};
    double h = f.nest.b / 2.0;
    VarOptions vopt;
    Complex v1 = var_integral(f.sys, f.p, eta, h, 1.0, f.nest, vopt);
    Complex v2 = iterated_var(f.sys, f.p, eta, h, VarSpec{{1.0}}, f.nest, vopt);
    CHECK(std::abs(v1 - v2) < 1e-9 * std::max(std::abs(v1), 1e-12));

    IteratedVarInfo ia, ib;
    Complex o1 = iterated_var(f.sys, f.p, eta, h, VarSpec{{1.0, 0.6}}, f.nest, vopt, &ia);
    Complex o2 = iterated_var(f.sys, f.p, eta, h, VarSpec{{0.6, 1.0}}, f.nest, vopt, &ib);
    CHECK(std::abs(o1 - o2) <= 1e-7 * std::max(std::abs(o1), 1e-12));
    CHECK(ia.terms.size() == ib.terms.size());

    // All continuations of an exact form vanish.
    BivariatePoly mp = integrating_factor_poly(f.sys, f.p);
    OneForm exact = OneForm::exact(mp, BivariatePoly::var_x());
    IteratedVarInfo info;
    iterated_var(f.sys, f.p, exact, h, VarSpec{{1.0, 0.6}}, f.nest, vopt, &info);
    Cycle base = trace_oval(f.sys, f.p, f.nest, h);
    for (const auto& term : info.terms)
        CHECK(std::abs(term.value) < 1e-7 * base.length());
}

TEST_CASE("VarSpec validation") {
    VarSpec empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    VarSpec negative{{1.0, -0.5}};
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}

TEST_CASE("saddle model transport: invariance under inward paths") {
    SaddleModel model{1.0, 1.0};
    SaddleTransportReport rep =
        saddle_model_transport_check(model, 0.2, HPath::spiral(Complex(0.2, 0), 0.0, 0.5));
    CHECK(rep.pass);
    CHECK(rep.worst_x_increase <= 1e-8);
    CHECK(rep.worst_y_increase <= 1e-8);

    // Constant path: trivially no increase.
    SaddleTransportReport cst =
        saddle_model_transport_check(model, 0.2, HPath::constant(Complex(0.2, 0)));
    CHECK(cst.pass);

    // Spiral with |rho|' < 0 lands on the correct level.
    SaddleModel skew{0.8, 1.6};
    HPath sp = HPath::spiral(Complex(0.15, 0), 1.5 * kPi, 0.3);
    SaddleTransportReport rep2 = saddle_model_transport_check(skew, 0.15, sp);
    CHECK(rep2.pass);
    CHECK(std::abs(rep2.final_level - sp.rho(1.0)) < 1e-12);
    CHECK(rep2.final_level_residual < 1e-9);

    // Modulus-increasing path is rejected.
    CHECK_THROWS_AS(
        saddle_model_transport_check(model, 0.2, HPath::radial_scale(Complex(0.2, 0), 1.5)),
        std::invalid_argument);
}

TEST_CASE("saddle-node model first integral") {
    SaddleNodeModel m0{0.0, 0.0};
    CHECK(std::abs(m0.first_integral(C2(0.5, 1.0)) - std::exp(-2.0)) < 1e-12);
    CHECK(std::abs(m0.first_integral(C2(0.5, 1.0)) - 0.135335) < 1e-5);
    CHECK_THROWS_AS(m0.first_integral(C2(0.0, 1.0)), std::domain_error);

    // Derivative along the model field vanishes (first integral). H is real
    // on real points here, so the complex step gives the directional
    // derivative without cancellation.
    for (SaddleNodeModel m : {SaddleNodeModel{0.0, 0.0}, SaddleNodeModel{0.1, 0.2},
                              SaddleNodeModel{0.05, -0.1}}) {
        for (auto [x, y] : {std::pair{0.5, 0.8}, std::pair{0.7, 0.3}, std::pair{0.4, 0.9}}) {
            C2 z(x, y);
            C2 v = m.field(z);
            double d = 1e-8;
            Complex dh = m.first_integral(z + Complex(0.0, d) * v).imag() / d;
            double scale = std::abs(m.first_integral(z)) * norm(v);
            CHECK(std::abs(dh) < 1e-10 * std::max(scale, 1.0));
        }
    }

    // eps -> 0 limit matches the eps = 0 branch with error O(eps).
    C2 z(0.5, 0.9);
    Complex h0 = SaddleNodeModel{0.0, 0.1}.first_integral(z);
    double e1 = std::abs(SaddleNodeModel{1e-2, 0.1}.first_integral(z) - h0);
    double e2 = std::abs(SaddleNodeModel{5e-3, 0.1}.first_integral(z) - h0);
    CHECK(e1 < 0.05 * std::abs(h0));
    CHECK(e2 < 0.66 * e1);
}

TEST_CASE("push_from_weak_manifold") {
    SaddleNodeModel model{0.1, 0.05};
    const double delta = 0.05;

    // Arc on the leaf {H = h}: y = h / H~(x), x in [x_end, 1].
    auto make_arc = [&](double y_at_1, int n) {
        Cycle arc;
        double h = y_at_1 * std::abs(model.h_tilde_x(Complex(1.0, 0.0)));
        arc.level = Complex(h, 0.0);
        FirstIntegralModel fim = model.integral_model();
        // Walk x down from 1 until y reaches 1.
        std::vector<double> xs;
        double x = 1.0;
        while (x > model.eps + 1e-3) {
            double y = h / std::abs(model.h_tilde_x(Complex(x, 0.0)));
            if (y > 1.0) break;
            xs.push_back(x);
            x -= 0.6 / n;
        }
        for (double xv : xs) {
            double y = h / model.h_tilde_x(Complex(xv, 0.0)).real();
            arc.points.push_back(C2(xv, y));
            arc.branch_logs.push_back(fim.principal_logs(C2(xv, y)));
        }
        arc.closed = false;
        return arc;
    };

    Cycle arc = make_arc(0.01, 400);  // dips to |y| = 0.01 < delta at x = 1
    REQUIRE(arc.points.size() > 10);
    FirstIntegralModel fim = model.integral_model();

    Cycle pushed = push_from_weak_manifold(model, arc, delta);
    double min_y = 1e300;
    for (const auto& pt : pushed.points) min_y = std::min(min_y, std::abs(pt.y));
    CHECK(min_y >= delta * (1.0 - 1e-6));
    CHECK(max_level_residual(fim, pushed) < 1e-9);

    // A cycle already outside {|y| < 2 delta} is unchanged.
    Cycle tall = make_arc(2.5 * delta, 200);
    Cycle same = push_from_weak_manifold(model, tall, delta);
    CHECK(Cycle::max_pointwise_distance(same, tall) == 0.0);

    // Cycle out of the small bidisc is rejected.
    Cycle bad = tall;
    for (auto& pt : bad.points) pt.y *= 20.0;
    CHECK_THROWS_AS(push_from_weak_manifold(model, bad, delta), std::domain_error);
}
