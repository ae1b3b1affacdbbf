#include "pai/cycle.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace pai {

double Cycle::length() const {
    if (points.size() < 2) return 0.0;
    double len = 0.0;
    for (size_t i = 0; i + 1 < points.size(); ++i) len += norm(points[i + 1] - points[i]);
    if (closed) len += norm(points.front() - points.back());
    return len;
}

double Cycle::signed_area() const {
    if (points.size() < 3) return 0.0;
    double area = 0.0;
    const size_t n = points.size();
    for (size_t i = 0; i < n; ++i) {
        const auto& p = points[i];
        const auto& q = points[(i + 1) % n];
        area += p.x.real() * q.y.real() - q.x.real() * p.y.real();
    }
    return 0.5 * area;
}

void Cycle::reverse() {
    std::reverse(points.begin(), points.end());
    if (!branch_logs.empty()) std::reverse(branch_logs.begin(), branch_logs.end());
    if (!chart_tags.empty()) std::reverse(chart_tags.begin(), chart_tags.end());
}

double Cycle::max_pointwise_distance(const Cycle& a, const Cycle& b) {
    if (a.points.size() != b.points.size())
        throw std::invalid_argument("max_pointwise_distance: marker counts differ");
    double m = 0.0;
    for (size_t i = 0; i < a.points.size(); ++i)
        m = std::max(m, norm(a.points[i] - b.points[i]));
    return m;
}

std::string Cycle::to_csv(const std::string& params_comment) const {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# level_re=%.17g level_im=%.17g closed=%d %s\n",
                  level.real(), level.imag(), closed ? 1 : 0, params_comment.c_str());
    os << buf << "re_x,im_x,re_y,im_y\n";
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", p.x.real(), p.x.imag(),
                      p.y.real(), p.y.imag());
        os << buf;
    }
    return os.str();
}

bool point_inside(const Cycle& cyc, double x, double y) {
    // Ray casting on the real projection.
    bool inside = false;
    const size_t n = cyc.points.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        double xi = cyc.points[i].x.real(), yi = cyc.points[i].y.real();
        double xj = cyc.points[j].x.real(), yj = cyc.points[j].y.real();
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

}  // namespace pai
