#pragma once

#include <string>
#include <vector>

#include "pai/common.hpp"

namespace pai {

// Ordered marker points on a (possibly complex) level set {H = h}.
// branch_logs, when present, holds the continuously tracked logs of the
// model's factors per marker; it is what makes re-evaluation of the level
// well defined away from the real domain.
struct Cycle {
    std::vector<C2> points;
    Complex level{0.0, 0.0};
    bool closed = false;
    std::vector<std::string> chart_tags;               // optional per-point labels
    std::vector<std::vector<Complex>> branch_logs;     // empty if untracked

    size_t size() const { return points.size(); }
    bool has_branch_logs() const { return !branch_logs.empty(); }

    // Polyline length; includes the wrap-around segment when closed.
    double length() const;
    // Shoelace area of the real projection (signed; > 0 for CCW).
    double signed_area() const;
    void reverse();

    // Largest |p - q| over paired markers of two cycles with equal marker
    // counts (used by path-reversal and symmetry tests).
    static double max_pointwise_distance(const Cycle& a, const Cycle& b);

    // CSV with columns re_x, im_x, re_y, im_y; the header line carries the
    // level and a caller-provided parameter string.
    std::string to_csv(const std::string& params_comment) const;
};

// Point-in-polygon test on the real projection of a closed cycle.
bool point_inside(const Cycle& closed_cycle, double x, double y);

}  // namespace pai
