#pragma once

#include "pai/cycle.hpp"
#include "pai/darboux.hpp"

namespace pai {

// The nest of ovals: interior maximum of H and its value b; the nest is
// h in (0, b).
struct NestInfo {
    C2 center;
    double b = 0.0;
};

struct TraceOptions {
    double level_tol_rel = 1e-12;  // |H - h| <= tol * h after correction
    double max_step = 0.05;        // absolute cap on marker spacing
    double target_turn = 0.06;     // radians of tangent rotation per step
    double step_floor = 1e-10;     // below this: step-collapse error
    int max_steps = 500000;
    int min_steps = 10;
    double closure_factor = 0.5;   // close when within factor * local step of seed
};

// Locate the nest center by grid seeding + Newton on theta = 0.
// Throws std::runtime_error when no interior critical point is found.
NestInfo interior_extremum(const DarbouxSystem& sys, const UnfoldingParams& p,
                           const Box& region);
inline NestInfo interior_extremum(const DarbouxSystem& sys, const UnfoldingParams& p) {
    return interior_extremum(sys, p, sys.region);
}

// Point on {H = h} found by bisection along a ray from the nest center.
// Throws std::domain_error when h is outside (0, b].
C2 find_seed(const DarbouxSystem& sys, const UnfoldingParams& p, const NestInfo& nest,
             double h);
C2 find_seed(const DarbouxSystem& sys, const UnfoldingParams& p, double h);

// Trace the closed real oval of {H = h}, counterclockwise, by a
// predictor-corrector walk along the plane field direction with Newton
// projection back onto the level set.
Cycle trace_oval(const DarbouxSystem& sys, const UnfoldingParams& p, const NestInfo& nest,
                 double h, const TraceOptions& opt = {});
Cycle trace_oval(const DarbouxSystem& sys, const UnfoldingParams& p, double h,
                 const TraceOptions& opt = {});

}  // namespace pai
