#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pai/cycle.hpp"
#include "pai/darboux.hpp"
#include "pai/integrate.hpp"
#include "pai/tracer.hpp"

namespace pai {

// Path in the h-plane avoiding 0.
struct HPath {
    std::function<Complex(double)> rho;   // [0,1] -> C \ {0}
    std::function<Complex(double)> drho;  // derivative

    // rho(t) = h0 (1 - kappa t) e^{i beta t}; modulus-decreasing for kappa > 0.
    static HPath spiral(Complex h0, double beta, double kappa);
    // Log-linear modulus change at fixed argument: rho(t) = h0 * m^t.
    static HPath radial_scale(Complex h0, double modulus_ratio);
    static HPath constant(Complex h0);
    HPath reversed() const;

    // Samples |rho|' and reports whether it is negative throughout.
    bool modulus_decreasing(int samples = 64) const;
    // Weak form: |rho|' <= 0 (constant paths allowed).
    bool modulus_nonincreasing(int samples = 64) const;
};

struct TransportOptions {
    int markers = 400;            // 0: keep the input marker set
    int min_markers = 64;
    int max_markers = 8192;
    double max_log_step = 0.15;   // per-step cap on any factor log increment
    double dt_initial = 0.01;
    double dt_max = 0.04;
    double dt_floor = 1e-12;
    double level_tol_rel = 1e-11;
    double respace_ratio = 10.0;  // max/min adjacent spacing triggering resample
    double grad_floor = 1e-9;     // ||grad H|| below this: critical-point error
    double domain_inflate = 4.0;  // markers-left-domain box factor
};

// Observer invoked after each accepted continuation step.
using TransportObserver =
    std::function<void(double t, Complex level, const std::vector<C2>& markers)>;

// Transport a cycle along a path in the h-plane by integrating the
// minimal-norm lift of rho'(t) through every marker, with Newton projection
// back onto {H = rho(t)} and branch-tracked factor logs.
Cycle continue_cycle(const FirstIntegralModel& model, const Cycle& cycle, const HPath& path,
                     const Box& domain, const TransportOptions& opt = {},
                     const TransportObserver& observer = nullptr);
Cycle continue_cycle(const DarbouxSystem& sys, const UnfoldingParams& p, const Cycle& cycle,
                     const HPath& path, const TransportOptions& opt = {},
                     const TransportObserver& observer = nullptr);

// Minimal-norm solution of dH(v) = xi at a real point p: v_i = conj(d_i H) xi
// / ||grad H||^2. Throws std::runtime_error near critical points.
C2 lift_tangent(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& point,
                Complex xi, double grad_floor = 1e-9);
C2 lift_tangent(const FirstIntegralModel& model, const C2& point, Complex xi,
                double grad_floor = 1e-9);

// Continuation along rho(t) = h (1 - kappa t) e^{i beta t}.
Cycle rotate_level(const DarbouxSystem& sys, const UnfoldingParams& p, const Cycle& cycle,
                   Complex h, double beta, double shrink, const TransportOptions& opt = {});

struct VarOptions {
    TransportOptions transport;
    QuadratureOptions quad;
    double shrink_per_pi = 0.05;  // |rho|' < 0 during rotations
    bool restore_modulus = true;  // radial leg back to |h| after rotating
};

// Var_a I(h) = I(h e^{i a pi}) - I(h e^{-i a pi}) via two continuations of
// the real oval.
Complex var_integral(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, double a, const NestInfo& nest, const VarOptions& opt = {});
Complex var_integral(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, double a);

struct VarSpec {
    std::vector<double> residues;  // a_1..a_k, all > 0
    void validate() const;
};

struct IteratedVarInfo {
    struct Term {
        double angle = 0;   // total rotation in radians
        double coeff = 0;   // signed binomial weight
        Complex value{0, 0};
    };
    std::vector<Term> terms;
    bool cost_warning = false;  // k > 4
};

// Var_{a_1,...,a_k} I(h): 2^k signed continuations I(h e^{i pi sum +-a_j}),
// grouped by total angle and summed in deterministic angle order.
Complex iterated_var(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, const VarSpec& spec, const NestInfo& nest,
                     const VarOptions& opt = {}, IteratedVarInfo* info = nullptr);
Complex iterated_var(const DarbouxSystem& sys, const UnfoldingParams& p, const OneForm& eta,
                     double h, const VarSpec& spec);

// Scalar helper used by unit tests: Var_a applied to h^b with the branch
// continued from positive real h.
Complex var_of_power(double b, double a, double h);

// Local models ---------------------------------------------------------------

struct SaddleModel {
    double lambda1 = 1.0;
    double lambda2 = 1.0;

    // H = x^{1/lambda1} y^{1/lambda2}.
    FirstIntegralModel integral_model() const;

    // Marker loop (x0 e^{i lambda1 s}, y0 e^{-i lambda2 s}) on one leaf;
    // closed exactly when both lambda are integers.
    Cycle leaf_loop(double x0, double y0, int markers) const;
};

struct SaddleTransportReport {
    bool pass = false;
    double worst_x_increase = 0.0;  // max over steps of increase of max|x|
    double worst_y_increase = 0.0;
    Complex final_level{0, 0};
    double final_level_residual = 0.0;
};

// Transports a model loop along the path with the module's lift and checks
// that max|x|, max|y| never increase beyond the slack (requires |rho|' < 0).
SaddleTransportReport saddle_model_transport_check(const SaddleModel& model, double h0,
                                                   const HPath& path, double slack = 1e-8,
                                                   const TransportOptions& opt = {});

struct SaddleNodeModel {
    double eps = 0.0;
    double alpha = 0.0;

    // H = y (x+eps)^alpha ((x-eps)/(x+eps))^{1/2 eps}; eps=0: y x^alpha e^{-1/x}.
    FirstIntegralModel integral_model() const;
    Complex first_integral(const C2& point) const;  // throws on x = +-eps
    // H~(x): the x-part of H (H = y * H~).
    Complex h_tilde_x(Complex x) const;
    // The model vector field (eq. of the unfolded saddle-node).
    C2 field(const C2& point) const;
};

// Flow by V = psi(|y|) (v_y - v_x) for time log(delta/c): the resulting
// cycle avoids {|y| < delta} while staying on its leaf.
Cycle push_from_weak_manifold(const SaddleNodeModel& model, const Cycle& cycle, double delta);

}  // namespace pai
