#pragma once

// Shared independent oracles for the test suites. These deliberately avoid
// the library's contour machinery: interior integrals go through a quadtree
// over an indicator region, derivatives through complex-step or central
// differences.

#include <algorithm>
#include <cmath>
#include <functional>

#include "pai/cycle.hpp"
#include "pai/darboux.hpp"

namespace pai_test {

using pai::Box;
using pai::C2;
using pai::Complex;

inline Box cycle_bbox(const pai::Cycle& cyc, double margin) {
    Box b{1e300, -1e300, 1e300, -1e300};
    for (const auto& pt : cyc.points) {
        b.xmin = std::min(b.xmin, pt.x.real());
        b.xmax = std::max(b.xmax, pt.x.real());
        b.ymin = std::min(b.ymin, pt.y.real());
        b.ymax = std::max(b.ymax, pt.y.real());
    }
    b.xmin -= margin;
    b.xmax += margin;
    b.ymin -= margin;
    b.ymax += margin;
    return b;
}

// Quadtree integral of f over {indicator true} inside box. Cells whose 3x3
// probe is uniformly inside are integrated with a 3x3 Gauss product rule;
// mixed cells subdivide down to max_depth, then contribute by center test.
inline double quadtree_integral(const std::function<double(double, double)>& f,
                                const std::function<bool(double, double)>& inside,
                                const Box& box, int max_depth) {
    static const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

    std::function<double(double, double, double, double, int)> rec =
        [&](double x0, double x1, double y0, double y1, int depth) -> double {
        int in_count = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (inside(x0 + 0.5 * i * (x1 - x0), y0 + 0.5 * j * (y1 - y0))) ++in_count;
        const double area = (x1 - x0) * (y1 - y0);
        if (in_count == 0 && depth > 2) return 0.0;
        if (in_count == 9 && depth > 2) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    s += gw[i] * gw[j] * f(x0 + gx[i] * (x1 - x0), y0 + gx[j] * (y1 - y0));
            return s * area;
        }
        if (depth >= max_depth) {
            double xc = 0.5 * (x0 + x1), yc = 0.5 * (y0 + y1);
            return inside(xc, yc) ? f(xc, yc) * area : 0.0;
        }
        double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
        return rec(x0, xm, y0, ym, depth + 1) + rec(xm, x1, y0, ym, depth + 1) +
               rec(x0, xm, ym, y1, depth + 1) + rec(xm, x1, ym, y1, depth + 1);
    };
    return rec(box.xmin, box.xmax, box.ymin, box.ymax, 0);
}

// Interior integral of d(eta / M) over {H >= h}: the Stokes-side oracle for
// contour integrals of M^{-1} eta over the oval at level h.
inline double stokes_interior_integral(const pai::DarbouxSystem& sys,
                                       const pai::UnfoldingParams& p, const pai::OneForm& eta,
                                       double h, const Box& box, int max_depth) {
    using pai::BivariatePoly;
    const BivariatePoly m = integrating_factor_poly(sys, p);
    const BivariatePoly mx = m.dx(), my = m.dy();
    const BivariatePoly curl = eta.b.dx() - eta.a.dy();

    auto f = [&](double x, double y) {
        C2 z(x, y);
        double mv = m.eval(z).real();
        // d(eta/M) = [ (Bx - Ay) M - (B Mx - A My) ] / M^2 dx^dy
        double num = curl.eval(z).real() * mv -
                     (eta.b.eval(z).real() * mx.eval(z).real() -
                      eta.a.eval(z).real() * my.eval(z).real());
        return num / (mv * mv);
    };
    auto inside = [&](double x, double y) {
        C2 z(x, y);
        for (const auto& fac : sys.factors)
            if (!(fac.poly.eval(z).real() > 0.0)) return false;
        if (!(sys.q.eval(z).real() > 0.0)) return false;
        if (!((sys.q.eval(z).real() + p.eps * sys.r.eval(z).real()) > 0.0)) return false;
        return first_integral(sys, p, z) >= h;
    };
    return quadtree_integral(f, inside, box, max_depth);
}

}  // namespace pai_test
