#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pai/integrate.hpp"
#include "pai/transport.hpp"

namespace pai {

// Sector {r_inner < |h| < r_outer, |arg h| <= half_angle} with its boundary
// sampled densely enough for phase unwrapping.
struct SectorContour {
    double r_inner = 0.0;
    double r_outer = 0.0;
    double half_angle = kPi;  // radians

    void validate() const;
    // Boundary points, counterclockwise, adaptively refined so that
    // consecutive phase jumps of f stay below pi/2.
    std::vector<Complex> sample_boundary(const std::function<Complex(Complex)>& f,
                                         int initial_per_edge = 64, int max_refine = 14) const;
};

// Unwrapped total phase change of the samples along an oriented arc.
// Throws std::domain_error on a zero sample and std::runtime_error when a
// jump of at least pi/2 makes unwrapping unreliable.
double argument_increment(const std::vector<Complex>& samples);

struct GrowthFit {
    double exponent = 0.0;    // N in |I| ~ C |h|^{-N}
    double confidence = 0.0;  // half-width of a crude 95% band on N
};

// Least-squares slope of log|I| against -log|h| on geometrically shrinking
// radii.
GrowthFit growth_exponent(const std::vector<double>& h_radii,
                          const std::vector<double>& i_magnitudes);

// Argument-principle count of zeros inside the sector. Throws
// std::runtime_error when the winding is not near an integer.
int sector_zero_count(const std::function<Complex(Complex)>& f, const SectorContour& sector);

struct LeadingTermFit {
    int model = 0;            // 1: h^alpha log^k h;  2: (log h)^{-k} (log log h)^l
    double alpha = 0.0;       // model 1 exponent
    int k = 0;
    int l = 0;                // model 2 only
    double coefficient = 0.0; // |c| of the leading term
    double residual = 0.0;    // relative rms misfit on held-out samples
    bool classified = false;  // false: both model families fit poorly
};

// Fits both model families to samples of I(h) near h -> 0+ and selects by
// held-out residual; integer k, l searched exhaustively in 0..6.
LeadingTermFit fit_leading_term(const std::vector<double>& h_samples,
                                const std::vector<double>& i_values,
                                double residual_threshold = 0.05);

// Zero count of f(w(h)) on [h_lo, h_hi] via the monotone substitution
// w = -1/omega(h, eps, alpha); counts in h and w coincide. Throws
// std::runtime_error if the substitution is not monotone on the interval.
int count_zeros_of_compensator_composite(const std::function<double(double)>& f, double eps,
                                         double alpha, double h_lo, double h_hi,
                                         int samples = 400);

struct UniformityCell {
    double eps = 0.0;
    double alpha = 0.0;
    double b = 0.0;
    double min_reachable_h = 0.0;
    int zero_count = 0;
    int zero_count_refined = 0;  // at doubled h resolution
};

struct UniformityTable {
    std::vector<UniformityCell> cells;
    int max_count = 0;
    int max_count_refined = 0;
    bool stable = false;  // max count identical under x2 h-refinement

    std::string to_csv() const;
};

struct UniformityOptions {
    int h_count = 40;
    double h_lo_frac = 0.02;   // grid spans [lo*b, hi*b], log-spaced
    double h_hi_frac = 0.95;
    SweepOptions sweep;
};

// Zero counts of I over (0, b(eps,alpha)) on a parameter grid, with a x2
// h-refinement stability check per cell.
UniformityTable uniformity_experiment(const DarbouxSystem& sys, const OneForm& eta,
                                      const std::vector<double>& eps_grid,
                                      const std::vector<double>& alpha_grid,
                                      const UniformityOptions& opt = {});

struct VariationFitResult {
    std::vector<double> h_samples;
    std::vector<double> w_samples;        // -1/omega(h, eps, alpha)
    std::vector<Complex> v_values;        // Var_{a_1..a_k} I(h)
    std::vector<double> residual_by_degree;  // relative rms residual per truncation degree
    std::vector<Complex> coefficients;    // final fit, ascending powers from min_degree
    int min_degree = 0;
    int best_degree = 0;
    double split_disagreement = 0.0;      // coefficient gap between the two sample halves
    bool degenerate = false;              // V below noise: nothing to fit
};

struct VariationFitOptions {
    VarOptions var;
    int min_degree = -2;   // lowest Laurent power in w
    int max_degree = 8;
    double noise_floor_rel = 1e-9;
};

// Computes V(h) = Var_{a_1..a_k} I(h) on the given samples and fits a
// truncated Laurent series in w = -1/omega(h, eps, alpha).
VariationFitResult variation_fit(const DarbouxSystem& sys, const UnfoldingParams& p,
                                 const OneForm& eta, const VarSpec& spec,
                                 const std::vector<double>& h_samples, const NestInfo& nest,
                                 const VariationFitOptions& opt = {});

}  // namespace pai
