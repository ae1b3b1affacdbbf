#include <random>

#include "doctest.h"
#include "pai/darboux.hpp"

using namespace pai;

namespace {

// Complex-step derivative of the real-analytic H along coordinate k.
// H is real on real points, so Im H(z + i d e_k)/d equals dH/dk to
// machine precision without subtractive cancellation.
C2 grad_h_complex_step(const DarbouxSystem& sys, const UnfoldingParams& p, double x,
                       double y, double d = 1e-150) {
    FirstIntegralModel m = first_integral_model(sys, p);
    Complex hx = m.value_principal(C2(Complex(x, d), Complex(y, 0.0)));
    Complex hy = m.value_principal(C2(Complex(x, 0.0), Complex(y, d)));
    return {Complex(hx.imag() / d, 0.0), Complex(hy.imag() / d, 0.0)};
}

bool in_triangle(double x, double y) { return x > 0.02 && y > 0.02 && x + y < 0.95; }

}  // namespace

TEST_CASE("triangle first integral at the reference point") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    UnfoldingParams p{0.0, 0.0};
    double h = first_integral(sys, p, C2(0.25, 0.25));
    CHECK(h == doctest::Approx(0.0625 * std::exp(-2.0)).epsilon(1e-12));
    CHECK(h == doctest::Approx(0.008459).epsilon(1e-4));
}

TEST_CASE("first integral: domain errors and vanishing factors") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    UnfoldingParams p{0.0, 0.0};
    CHECK_THROWS_AS(first_integral(sys, p, C2(0.0, 0.25)), std::domain_error);
    CHECK_THROWS_AS(first_integral(sys, p, C2(-0.1, 0.25)), std::domain_error);
    // Limit 0 when a factor with positive exponent vanishes: approach the edge.
    double prev = 1.0;
    for (double x = 1e-3; x > 1e-12; x *= 1e-3) {
        double h = first_integral(sys, p, C2(x, 0.25));
        CHECK(h < prev);
        prev = h;
    }
    CHECK(prev < 1e-12);
}

TEST_CASE("eps -> 0 convergence of the unfolded integral") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    double h0 = first_integral(sys, {0.0, 0.0}, C2(0.25, 0.25));
    double h1 = first_integral(sys, {1e-6, 0.0}, C2(0.25, 0.25));
    CHECK(std::abs(h1 - h0) < 1e-5 * h0);

    // Observed order eps at an interior point.
    double e1 = std::abs(first_integral(sys, {1e-3, 0.0}, C2(0.3, 0.2)) -
                         first_integral(sys, {0.0, 0.0}, C2(0.3, 0.2)));
    double e2 = std::abs(first_integral(sys, {5e-4, 0.0}, C2(0.3, 0.2)) -
                         first_integral(sys, {0.0, 0.0}, C2(0.3, 0.2)));
    CHECK(e2 < 0.7 * e1);
    CHECK(e2 > 0.3 * e1);
}

TEST_CASE("log derivative form matches grad H / H") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    UnfoldingParams p{0.0, 0.0};
    // (0.25, 0.25) is the nest center: both sides vanish there.
    {
        C2 z(0.25, 0.25);
        double h = first_integral(sys, p, z);
        C2 g = grad_h_complex_step(sys, p, 0.25, 0.25);
        C2 th = log_derivative_form(sys, p, z);
        CHECK(std::abs(th.x.real() - g.x.real() / h) <= 1e-9 * std::max(1.0, std::abs(th.x.real())));
        CHECK(std::abs(th.y.real() - g.y.real() / h) <= 1e-9 * std::max(1.0, std::abs(th.y.real())));
    }
    for (auto [x, y] : {std::pair{0.3, 0.2}, std::pair{0.1, 0.55}, std::pair{0.45, 0.12}}) {
        C2 z(x, y);
        double h = first_integral(sys, p, z);
        C2 g = grad_h_complex_step(sys, p, x, y);
        C2 th = log_derivative_form(sys, p, z);
        CHECK(std::abs(th.x.real() - g.x.real() / h) < 1e-9 * std::abs(th.x.real()));
        CHECK(std::abs(th.y.real() - g.y.real() / h) < 1e-9 * std::abs(th.y.real()));
    }
}

TEST_CASE("log derivative residues at eps = 0.1") {
    // theta = a1 dx/x + a2 dy/y + (alpha - 1/eps) dQ/Q + (1/eps) dQe/Qe.
    // With alpha = 0, eps = 0.1 the dQ/Q coefficient is -10, the dQe/Qe one +10.
    DarbouxSystem sys = DarbouxSystem::triangle();
    UnfoldingParams p{0.1, 0.0};
    FirstIntegralModel m = first_integral_model(sys, p);
    REQUIRE(m.terms.size() == 4);
    CHECK(m.terms[2].exponent == doctest::Approx(-10.0));
    CHECK(m.terms[3].exponent == doctest::Approx(10.0));
    // And the assembled form has theta(v) = 0 for the plane field.
    C2 z(0.3, 0.2);
    C2 th = log_derivative_form(sys, p, z);
    C2 v = plane_vector_field(sys, p, z);
    CHECK(std::abs(pair_form(th, v)) < 1e-12 * norm(th) * norm(v));
}

TEST_CASE("theta pole error on factor curves") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    CHECK_THROWS_AS(log_derivative_form(sys, {0.0, 0.0}, C2(0.0, 0.5)), std::domain_error);
}

TEST_CASE("integrating factor values") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    CHECK(integrating_factor(sys, {0.0, 0.0}, C2(0.25, 0.25)).real() ==
          doctest::Approx(0.015625).epsilon(1e-14));
    CHECK(integrating_factor(sys, {0.1, 0.0}, C2(0.25, 0.25)).real() ==
          doctest::Approx(0.0125).epsilon(1e-14));
    CHECK(std::abs(integrating_factor(sys, {0.0, 0.0}, C2(0.0, 0.25))) == 0.0);
}

TEST_CASE("plane field: dH(field) = 0 at random points") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (UnfoldingParams p : {UnfoldingParams{0.0, 0.0}, UnfoldingParams{0.05, 0.02}}) {
        int done = 0;
        while (done < 100) {
            double x = u(rng), y = u(rng);
            if (!in_triangle(x, y)) continue;
            ++done;
            C2 z(x, y);
            C2 v = plane_vector_field(sys, p, z);
            C2 th = log_derivative_form(sys, p, z);
            double denom = norm(th) * norm(v);
            if (denom == 0.0) continue;
            CHECK(std::abs(pair_form(th, v)) < 1e-9 * denom);
        }
    }
}

TEST_CASE("plane field is tangent to factor curves") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    UnfoldingParams p{0.05, 0.0};
    // On {y=0} the field must be tangent to the line: its y-component vanishes.
    C2 z(1.0 - p.eps / 2.0, 0.0);
    C2 v = plane_vector_field(sys, p, z);
    CHECK(std::abs(v.y) < 1e-14);
}

TEST_CASE("M * theta is polynomial: assembled form matches pointwise product") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (UnfoldingParams p : {UnfoldingParams{0.0, 0.0}, UnfoldingParams{0.1, -0.03}}) {
        OneForm mt = m_theta_form(sys, p);
        int done = 0;
        while (done < 50) {
            double x = u(rng), y = u(rng);
            if (!in_triangle(x, y)) continue;
            ++done;
            C2 z(x, y);
            Complex m = integrating_factor(sys, p, z);
            C2 th = log_derivative_form(sys, p, z);
            CHECK(std::abs(mt.a.eval(z) - m * th.x) < 1e-10 * std::max(1.0, std::abs(m * th.x)));
            CHECK(std::abs(mt.b.eval(z) - m * th.y) < 1e-10 * std::max(1.0, std::abs(m * th.y)));
        }
    }
}

TEST_CASE("dH = H * theta via complex step at random points") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (UnfoldingParams p : {UnfoldingParams{0.0, 0.0}, UnfoldingParams{0.08, 0.04}}) {
        int done = 0;
        while (done < 60) {
            double x = u(rng), y = u(rng);
            if (!in_triangle(x, y)) continue;
            ++done;
            double h = first_integral(sys, p, C2(x, y));
            C2 g = grad_h_complex_step(sys, p, x, y);
            C2 th = log_derivative_form(sys, p, C2(x, y));
            double sc = std::max({std::abs(g.x.real()), std::abs(g.y.real()), 1e-300});
            CHECK(std::abs(g.x.real() - h * th.x.real()) < 1e-7 * sc);
            CHECK(std::abs(g.y.real() - h * th.y.real()) < 1e-7 * sc);
        }
    }
}

TEST_CASE("system JSON round trip is exact") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    sys.factors[0].exponent = 1.0 / 3.0;
    sys.q.add_term(2, 1, -0.12345678901234567);
    std::string text = sys.to_json();
    DarbouxSystem back = DarbouxSystem::from_json(text);
    CHECK(back.factors.size() == sys.factors.size());
    CHECK(back.factors[0].exponent == sys.factors[0].exponent);
    CHECK(back.q == sys.q);
    CHECK(back.r == sys.r);
    CHECK(back.region.xmin == sys.region.xmin);
    CHECK(back.to_json() == text);
}

TEST_CASE("validation rejects bad systems") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    sys.factors[0].exponent = -1.0;
    CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
    sys = DarbouxSystem::triangle();
    sys.r = BivariatePoly();
    CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
}

TEST_CASE("genericity: triangle passes with unit determinants") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    GenericityReport rep = check_genericity(sys, sys.region);
    CHECK(rep.pass);
    REQUIRE(rep.intersections.size() == 3);
    for (const auto& inter : rep.intersections) {
        CHECK(inter.det == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(inter.transversal);
    }
    // The three vertices.
    int seen = 0;
    for (const auto& inter : rep.intersections) {
        if (std::hypot(inter.x, inter.y) < 1e-8) ++seen;                    // (0,0)
        if (std::hypot(inter.x - 1.0, inter.y) < 1e-8) ++seen;              // (1,0)
        if (std::hypot(inter.x, inter.y - 1.0) < 1e-8) ++seen;              // (0,1)
    }
    CHECK(seen == 3);
}

TEST_CASE("genericity: tangential intersection is flagged") {
    DarbouxSystem sys;
    sys.factors.push_back({BivariatePoly::var_x(), 1.0});
    // P2 = x + x^2 - y^2, tangent to {x=0} at the origin.
    BivariatePoly p2 = BivariatePoly::var_x() + BivariatePoly::monomial(2, 0, 1.0) -
                       BivariatePoly::monomial(0, 2, 1.0);
    sys.factors.push_back({p2, 1.0});
    sys.q = BivariatePoly::constant(1.0) - BivariatePoly::var_x() - BivariatePoly::var_y();
    sys.r = BivariatePoly::constant(-1.0);
    sys.region = {-0.5, 0.5, -0.5, 0.5};
    GenericityReport rep = check_genericity(sys, sys.region);
    CHECK(!rep.pass);
    bool tangency = false;
    for (const auto& o : rep.offences)
        if (o.kind == "transversality" && std::hypot(o.x, o.y) < 1e-4) tangency = true;
    CHECK(tangency);
}

TEST_CASE("genericity: R = Q violates intersection emptiness") {
    DarbouxSystem sys = DarbouxSystem::triangle();
    sys.r = sys.q;
    GenericityReport rep = check_genericity(sys, sys.region);
    CHECK(!rep.pass);
    bool rq = false;
    for (const auto& o : rep.offences)
        if (o.kind == "rq-intersection") rq = true;
    CHECK(rq);
}
