#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pai/poly.hpp"

namespace pai {

// One invariant-curve factor P_i with its positive real exponent a_i.
struct Factor {
    BivariatePoly poly;
    double exponent = 1.0;
};

// Polynomial data of the first integral
//   H_0 = P_1^{a_1} ... P_k^{a_k} * exp(R/Q)
// together with its unfolding
//   H_{eps,alpha} = prod P_i^{a_i} * Q^{alpha - 1/eps} * (Q + eps R)^{1/eps},
// and a bounding box containing the nest of ovals.
struct DarbouxSystem {
    std::vector<Factor> factors;
    BivariatePoly q;
    BivariatePoly r;
    Box region;

    void validate() const;  // throws std::invalid_argument on bad data

    std::string to_json() const;
    static DarbouxSystem from_json(const std::string& text);

    // The fixture used throughout the tests: P1=x, P2=y (exponents 1),
    // Q = 1-x-y, R = -1, region slightly larger than the unit triangle.
    static DarbouxSystem triangle();
};

struct UnfoldingParams {
    double eps = 0.0;
    double alpha = 0.0;
};

// eta = A dx + B dy.
struct OneForm {
    BivariatePoly a;
    BivariatePoly b;

    int degree() const { return std::max(a.degree(), b.degree()); }
    static OneForm zero() { return {}; }
    // M * dF for polynomial F; integrates to zero over closed cycles.
    static OneForm exact(const BivariatePoly& m_poly, const BivariatePoly& f);
};

// Multiplicative model of H as exp( sum c_i log f_i  [+ R/Q] ).
// This is the per-branch representation used by evaluation and transport:
// every multivalued quantity is reduced to logs of explicit polynomials.
struct FirstIntegralModel {
    struct LogTerm {
        BivariatePoly poly;
        double exponent;  // coefficient of log(poly)
    };
    std::vector<LogTerm> terms;
    bool has_exp_part = false;
    BivariatePoly exp_num;  // R of the exp(R/Q) part
    BivariatePoly exp_den;  // Q of the exp(R/Q) part

    // Principal-branch value; requires every factor value off the negative
    // real cut. Real nest points (all factors positive) are always fine.
    Complex value_principal(const C2& z) const;

    // theta = d log H as a covector at z. Pole when a factor vanishes.
    C2 theta(const C2& z) const;

    // Derivative of theta contracted with direction d, i.e. the covector
    // z -> d(theta(.)(d)); used by Newton refinements on levels.
    C2 theta_jacobian_times(const C2& z, const C2& d) const;

    // Per-branch data: the log of every factor plus the rational part,
    // tracked continuously during transport.
    int log_count() const { return int(terms.size()); }
    std::vector<Complex> principal_logs(const C2& z) const;
    Complex value_from_logs(const C2& z, const std::vector<Complex>& logs) const;

    double min_factor_abs(const C2& z) const;
    // Index of the factor with smallest |value| at z (diagnostics).
    int nearest_factor(const C2& z) const;
    std::string factor_name(int index) const;
};

// Evaluation and assembly --------------------------------------------------

// H_{eps,alpha}(z) on the real principal branch. Throws std::domain_error
// if any factor is nonpositive at a real z.
double first_integral(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z);

// The branch/transport model of H_{eps,alpha}.
FirstIntegralModel first_integral_model(const DarbouxSystem& sys, const UnfoldingParams& p);

// theta_{eps,alpha}(z); throws std::domain_error on a factor zero.
C2 log_derivative_form(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z);

// M = Q (Q + eps R) prod P_i evaluated at z.
Complex integrating_factor(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z);
BivariatePoly integrating_factor_poly(const DarbouxSystem& sys, const UnfoldingParams& p);

// M * theta expanded symbolically; polynomial identically in eps
// (the 1/eps pieces cancel):
//   M theta = sum_i a_i Q Qe (prod_{j!=i} P_j) dP_i
//           + alpha Qe (prod P) dQ + (prod P)(Q dR - R dQ),  Qe = Q + eps R.
OneForm m_theta_form(const DarbouxSystem& sys, const UnfoldingParams& p);

// The polynomial vector field (-B, A) for M theta = A dx + B dy;
// tangent to level curves of H.
C2 plane_vector_field(const DarbouxSystem& sys, const UnfoldingParams& p, const C2& z);

// Genericity ---------------------------------------------------------------

struct GenericityOptions {
    double transversality_tol = 1e-6;
    double gradient_tol = 1e-6;
    int grid = 96;
};

struct GenericityReport {
    struct Intersection {
        int factor_a = -1;  // index into curve list (factors then Q)
        int factor_b = -1;
        double x = 0, y = 0;
        double det = 0;  // |det(grad_a, grad_b)|
        bool transversal = false;
    };
    struct Offence {
        std::string kind;  // "smoothness" | "transversality" | "rq-intersection"
        double x = 0, y = 0;
        std::string detail;
    };
    bool pass = false;
    std::vector<Intersection> intersections;
    std::vector<Offence> offences;

    std::string summary() const;
};

GenericityReport check_genericity(const DarbouxSystem& sys, const Box& region,
                                  const GenericityOptions& opt = {});

}  // namespace pai
