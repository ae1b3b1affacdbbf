#pragma once

#include <string>
#include <vector>

#include "pai/common.hpp"

namespace pai {

// The transcendental function omega(h, eps, alpha) defined by
//   Htilde(-1/omega, eps, alpha) = h,
// where Htilde(x) = x^alpha ((x-eps)/x)^{1/eps} for eps != 0 and
// x^alpha e^{-1/x} for eps = 0. At alpha = 0 it reduces to the classical
// compensator (h^eps - 1)/eps, and to log h at eps = alpha = 0.

Complex h_tilde(Complex x, double eps, double alpha);
// d log Htilde / dx.
Complex h_tilde_dlog(Complex x, double eps, double alpha);

// Supremum of Htilde over the real branch domain x in (max(eps,0), inf).
// +inf when alpha >= 0; for alpha < 0 the branch folds at
// x* = eps + 1/|alpha| and the real compensator exists only for h below
// Htilde(x*).
double h_tilde_branch_sup(double eps, double alpha);

// alpha = 0 closed form.
double omega_closed_form(double h, double eps);

// Newton solve with the alpha = 0 closed form as seed and continuation in
// alpha. Residual |Htilde(-1/omega) - h| < 1e-12 h on success. Throws
// std::domain_error when h is beyond the branch fold and
// std::runtime_error when Newton fails to converge.
double omega_root(double h, double eps, double alpha);

// Integrates the Pfaffian ODE  d omega/du = omega (1+eps omega) /
// (omega - alpha (1+eps omega)),  u = log h,  from (h0, omega0) to h.
// Throws std::runtime_error on a singularity encounter.
double omega_ode(double h, double h0, double omega0, double eps, double alpha);

// Solves w^alpha e^{-1/w} = e^u for Re u < -L with the asymptotic seed
// w = -1/u; the returned branch is the one continuous with the seed.
Complex w_exponential(Complex u, double alpha, double min_neg_re = 5.0);

enum class ChartId { S, E, N };

// Chart ODE route: blow the initial omega0 up into the chart variable,
// integrate the chart ODE along the real u-segment [u0, u1], blow back down.
//   S: w = eps*y,      y' = y(y-1)/(1+eps*alpha*(y-1))      (eps != 0)
//   E: w itself,       w' = w(w-eps)/(1+alpha*(w-eps))
//   N: w = 1/(alpha z), z' = -z(1-alpha*eps*z)/(1+z-alpha*eps*z)  (alpha != 0)
// with w = -1/omega throughout. Throws std::domain_error when the chart is
// unavailable or the trajectory leaves its validity region.
double chart_solution(ChartId chart, double eps, double alpha, double u0, double u1,
                      double omega0);

// Chart whose validity region covers w = -1/omega.
ChartId choose_chart(double omega, double eps, double alpha);

struct BijectionReport {
    bool pass = false;
    double h_sup = 0.0;             // upper end of the real branch domain (capped at 1)
    int samples = 0;
    std::vector<double> violations; // h values where monotonicity/definition fails
    std::string summary() const;
};

// Samples h -> -1/omega on (0, 1] and checks strict monotonicity.
BijectionReport check_bijection(double eps, double alpha, int samples = 200);

}  // namespace pai
