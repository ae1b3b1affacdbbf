#pragma once

#include <optional>
#include <vector>

#include "pai/cycle.hpp"
#include "pai/darboux.hpp"
#include "pai/tracer.hpp"

namespace pai {

struct QuadratureOptions {
    double seg_rel_tol = 1e-12;   // per-segment halving agreement target
    double abs_floor = 1e-16;     // absolute floor relative to integrand scale
    int max_depth = 12;
    double level_tol_rel = 1e-12; // node projection accuracy
};

struct QuadratureDiagnostics {
    double error_estimate = 0.0;  // sum of per-segment halving discrepancies
    double abs_mass = 0.0;        // sum of |segment integrals| (cancellation scale)
    int refined_segments = 0;
};

// Integral of (A dx + B dy)/M along a cycle on a level set of H, where the
// path between markers is the level curve itself: chord nodes are projected
// onto {H = level} along a per-segment direction, with analytic tangents.
// Throws std::domain_error if M vanishes at a marker (pole on contour) and
// std::runtime_error if the refinement budget cannot meet the tolerance.
Complex integrate_form(const Cycle& cycle, const DarbouxSystem& sys, const UnfoldingParams& p,
                       const OneForm& eta, const QuadratureOptions& opt = {},
                       QuadratureDiagnostics* diag = nullptr);

// trace_oval followed by integrate_form; returns the real value of I(h).
// A nonzero imaginary remainder below tolerance is discarded (and reported
// through diag_imag when provided); above tolerance it throws.
double pseudo_abelian_integral(const DarbouxSystem& sys, const UnfoldingParams& p,
                               const OneForm& eta, double h, const NestInfo& nest,
                               const TraceOptions& topt = {}, const QuadratureOptions& qopt = {},
                               double* diag_imag = nullptr);
double pseudo_abelian_integral(const DarbouxSystem& sys, const UnfoldingParams& p,
                               const OneForm& eta, double h);

struct HGridSpec {
    double h_min = 0.0;
    double h_max = 0.0;
    int count = 0;
    bool log_spaced = true;

    std::vector<double> make() const;
};

struct SweepResult {
    UnfoldingParams params;
    std::vector<double> h_samples;        // strictly increasing
    std::vector<Complex> i_values;        // real on real ovals
    std::vector<double> diagnostics;      // per-sample quadrature error estimate
    std::vector<double> zeros;            // refined zero locations in h
    double min_reachable_h = 0.0;         // tracer floor actually reached
    int failed_samples = 0;               // grid points lost to the polycycle regime
    double magnitude = 0.0;               // max |I| over the sweep

    std::string to_csv() const;           // h, I, err_estimate
    std::string zeros_json() const;
};

struct SweepOptions {
    TraceOptions trace;
    QuadratureOptions quad;
    double zero_rel_threshold = 1e-12;    // |I| below this * max|I| counts as zero
    double zero_refine_rel = 1e-10;       // bisection tolerance in h
    int jobs = 1;
};

SweepResult sweep(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                  const HGridSpec& grid, const SweepOptions& opt = {});

}  // namespace pai
