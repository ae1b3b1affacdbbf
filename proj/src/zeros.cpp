#include "pai/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pai/compensator.hpp"
#include "pai/rootfind.hpp"

namespace pai {

void SectorContour::validate() const {
    if (!(0.0 < r_inner) || !(r_inner < r_outer))
        throw std::invalid_argument("SectorContour: need 0 < r_inner < r_outer");
    if (!(half_angle > 0.0) || half_angle > kPi)
        throw std::invalid_argument("SectorContour: half_angle must lie in (0, pi]");
}

namespace {

// Boundary parametrization, counterclockwise: outer arc (-A -> A), inward
// radial at +A, inner arc (A -> -A), outward radial at -A.
Complex sector_point(const SectorContour& c, double t) {
    const double A = c.half_angle;
    double s = t * 4.0;
    if (s < 1.0) return std::polar(c.r_outer, -A + 2.0 * A * s);
    if (s < 2.0) return std::polar(c.r_outer + (c.r_inner - c.r_outer) * (s - 1.0), A);
    if (s < 3.0) return std::polar(c.r_inner, A - 2.0 * A * (s - 2.0));
    return std::polar(c.r_inner + (c.r_outer - c.r_inner) * (s - 3.0), -A);
}

}  // namespace

std::vector<Complex> SectorContour::sample_boundary(const std::function<Complex(Complex)>& f,
                                                    int initial_per_edge, int max_refine) const {
    validate();
    std::vector<double> ts;
    const int n0 = 4 * initial_per_edge;
    for (int i = 0; i <= n0; ++i) ts.push_back(double(i) / n0);
    std::vector<Complex> vals(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) vals[i] = f(sector_point(*this, ts[i]));

    for (int round = 0; round < max_refine; ++round) {
        bool refined = false;
        std::vector<double> nts;
        std::vector<Complex> nvals;
        nts.push_back(ts[0]);
        nvals.push_back(vals[0]);
        for (size_t i = 1; i < ts.size(); ++i) {
            if (vals[i - 1] == Complex(0, 0) || vals[i] == Complex(0, 0))
                throw std::domain_error("SectorContour: zero on contour");
            double jump = std::abs(std::arg(vals[i] / vals[i - 1]));
            if (jump >= 0.5 * kPi * 0.9) {
                double tm = 0.5 * (ts[i - 1] + ts[i]);
                nts.push_back(tm);
                nvals.push_back(f(sector_point(*this, tm)));
                refined = true;
            }
            nts.push_back(ts[i]);
            nvals.push_back(vals[i]);
        }
        ts = std::move(nts);
        vals = std::move(nvals);
        if (!refined) return vals;
    }
    throw std::runtime_error("SectorContour: could not refine below phase-jump limit");
}

double argument_increment(const std::vector<Complex>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("argument_increment: too few samples");
    double total = 0.0;
    for (size_t i = 1; i < samples.size(); ++i) {
        if (samples[i - 1] == Complex(0, 0) || samples[i] == Complex(0, 0))
            throw std::domain_error("argument_increment: zero sample on arc");
        double jump = std::arg(samples[i] / samples[i - 1]);
        if (std::abs(jump) >= 0.5 * kPi)
            throw std::runtime_error("argument_increment: phase jump >= pi/2 (undersampled)");
        total += jump;
    }
    return total;
}

GrowthFit growth_exponent(const std::vector<double>& h_radii,
                          const std::vector<double>& i_magnitudes) {
    if (h_radii.size() != i_magnitudes.size() || h_radii.size() < 3)
        throw std::invalid_argument("growth_exponent: need >= 3 paired samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < h_radii.size(); ++i) {
        if (!(i_magnitudes[i] > 0.0)) continue;
        double x = -std::log(h_radii[i]);
        double y = std::log(i_magnitudes[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) throw std::runtime_error("growth_exponent: fit nonconvergent (zero samples)");
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double ss = 0;
    for (size_t i = 0; i < h_radii.size(); ++i) {
        if (!(i_magnitudes[i] > 0.0)) continue;
        double x = -std::log(h_radii[i]);
        double r = std::log(i_magnitudes[i]) - (slope * x + intercept);
        ss += r * r;
    }
    double se = std::sqrt(ss / std::max(1, n - 2) / (denom / n));
    return {slope, 2.0 * se};
}

int sector_zero_count(const std::function<Complex(Complex)>& f, const SectorContour& sector) {
    std::vector<Complex> samples = sector.sample_boundary(f);
    samples.push_back(samples.front());  // close the loop
    double total = argument_increment(samples);
    double winding = total / (2.0 * kPi);
    double rounded = std::round(winding);
    if (std::abs(winding - rounded) > 0.1)
        throw std::runtime_error("sector_zero_count: non-integer winding " +
                                 std::to_string(winding));
    return int(rounded);
}

namespace {

struct LinFit {
    std::vector<double> beta;
    double rms = 0.0;  // on the evaluation set
};

// Ordinary least squares of y against columns X (small problems), evaluated
// on a held-out set.
LinFit ols(const std::vector<std::vector<double>>& x_train, const std::vector<double>& y_train,
           const std::vector<std::vector<double>>& x_test, const std::vector<double>& y_test) {
    const size_t p = x_train.empty() ? 0 : x_train[0].size();
    std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
    std::vector<double> atb(p, 0.0);
    for (size_t i = 0; i < x_train.size(); ++i) {
        for (size_t a = 0; a < p; ++a) {
            atb[a] += x_train[i][a] * y_train[i];
            for (size_t b = 0; b <= a; ++b) ata[a][b] += x_train[i][a] * x_train[i][b];
        }
    }
    for (size_t a = 0; a < p; ++a)
        for (size_t b = a + 1; b < p; ++b) ata[a][b] = ata[b][a];
    // Gaussian elimination with partial pivoting; tiny ridge for safety.
    for (size_t a = 0; a < p; ++a) ata[a][a] += 1e-12;
    std::vector<double> beta(atb);
    {
        std::vector<std::vector<double>> m(ata);
        for (size_t col = 0; col < p; ++col) {
            size_t piv = col;
            for (size_t r = col + 1; r < p; ++r)
                if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
            std::swap(m[col], m[piv]);
            std::swap(beta[col], beta[piv]);
            for (size_t r = col + 1; r < p; ++r) {
                double fct = m[r][col] / m[col][col];
                for (size_t cc = col; cc < p; ++cc) m[r][cc] -= fct * m[col][cc];
                beta[r] -= fct * beta[col];
            }
        }
        for (size_t col = p; col-- > 0;) {
            for (size_t cc = col + 1; cc < p; ++cc) beta[col] -= m[col][cc] * beta[cc];
            beta[col] /= m[col][col];
        }
    }
    double ss = 0.0;
    for (size_t i = 0; i < x_test.size(); ++i) {
        double pred = 0.0;
        for (size_t a = 0; a < p; ++a) pred += x_test[i][a] * beta[a];
        double r = y_test[i] - pred;
        ss += r * r;
    }
    LinFit out;
    out.beta = beta;
    out.rms = x_test.empty() ? 0.0 : std::sqrt(ss / x_test.size());
    return out;
}

}  // namespace

LeadingTermFit fit_leading_term(const std::vector<double>& h_samples,
                                const std::vector<double>& i_values,
                                double residual_threshold) {
    if (h_samples.size() != i_values.size() || h_samples.size() < 8)
        throw std::invalid_argument("fit_leading_term: need >= 8 paired samples");
    // Assemble log-chart features; samples must satisfy h < 1/e so that
    // log log(1/h) is defined.
    std::vector<double> lh, ll1, ll2, y;
    for (size_t i = 0; i < h_samples.size(); ++i) {
        double h = h_samples[i];
        double v = std::abs(i_values[i]);
        if (!(h > 0.0) || h >= 0.3678 || !(v > 0.0)) continue;
        double L1 = std::log(1.0 / h);
        lh.push_back(std::log(h));
        ll1.push_back(std::log(L1));
        ll2.push_back(std::log(std::log(L1)));
        y.push_back(std::log(v));
    }
    if (y.size() < 8) throw std::invalid_argument("fit_leading_term: too few usable samples");

    // Even indices train, odd indices held out.
    auto split = [&](const std::vector<double>& v, bool odd) {
        std::vector<double> out;
        for (size_t i = odd ? 1 : 0; i < v.size(); i += 2) out.push_back(v[i]);
        return out;
    };
    std::vector<double> y_tr = split(y, false), y_te = split(y, true);

    LeadingTermFit best;
    best.residual = 1e300;

    // Model 1: log|I| = c + alpha log h + k log log(1/h); with k fixed,
    // fit y - k log L1 = c + alpha log h.
    for (int k = 0; k <= 6; ++k) {
        std::vector<double> y2(y.size());
        for (size_t i = 0; i < y.size(); ++i) y2[i] = y[i] - k * ll1[i];
        std::vector<double> y2tr = split(y2, false), y2te = split(y2, true);
        std::vector<std::vector<double>> x2tr, x2te;
        {
            std::vector<double> lh_tr = split(lh, false), lh_te = split(lh, true);
            for (double v : lh_tr) x2tr.push_back({1.0, v});
            for (double v : lh_te) x2te.push_back({1.0, v});
        }
        LinFit fit = ols(x2tr, y2tr, x2te, y2te);
        if (fit.rms < best.residual) {
            best.residual = fit.rms;
            best.model = 1;
            best.alpha = fit.beta[1];
            best.k = k;
            best.l = 0;
            best.coefficient = std::exp(fit.beta[0]);
        }
    }
    // Model 2: log|I| = c - k log L1 + l log L2 with integer k, l.
    for (int k = 0; k <= 6; ++k) {
        for (int l = 0; l <= 6; ++l) {
            std::vector<double> y2(y.size());
            for (size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + k * ll1[i] - l * ll2[i];
            std::vector<double> y2tr = split(y2, false), y2te = split(y2, true);
            std::vector<std::vector<double>> x2tr(y2tr.size(), {1.0}), x2te(y2te.size(), {1.0});
            LinFit fit = ols(x2tr, y2tr, x2te, y2te);
            // Model 2 must win by a clear margin: near-ties (constant data
            // fits both families exactly) resolve to model 1.
            if (fit.rms < best.residual * 0.95 - 1e-12) {
                best.residual = fit.rms;
                best.model = 2;
                best.alpha = 0.0;
                best.k = k;
                best.l = l;
                best.coefficient = std::exp(fit.beta[0]);
            }
        }
    }
    best.classified = best.residual <= residual_threshold;
    return best;
}

int count_zeros_of_compensator_composite(const std::function<double(double)>& f, double eps,
                                         double alpha, double h_lo, double h_hi, int samples) {
    if (!(0.0 < h_lo) || !(h_lo < h_hi))
        throw std::invalid_argument("count_zeros_of_compensator_composite: bad interval");
    std::vector<double> hs(samples), ws(samples);
    for (int i = 0; i < samples; ++i) {
        double t = double(i) / (samples - 1);
        hs[i] = h_lo * std::pow(h_hi / h_lo, t);
        ws[i] = -1.0 / omega_root(hs[i], eps, alpha);
    }
    for (int i = 1; i < samples; ++i)
        if (!(ws[i] > ws[i - 1]))
            throw std::runtime_error(
                "count_zeros_of_compensator_composite: -1/omega not monotone on interval");

    int count = 0;
    for (int i = 1; i < samples; ++i) {
        double a = f(ws[i - 1]), b = f(ws[i]);
        if (a == 0.0) continue;  // counted by the crossing on the other side
        if (a * b < 0.0) {
            solve_bracketed([&](double w) { return f(w); }, ws[i - 1], ws[i], 1e-12);
            ++count;
        }
    }
    return count;
}

std::string UniformityTable::to_csv() const {
    std::ostringstream os;
    os << "eps,alpha,zero_count,zero_count_refined,b,min_reachable_h\n";
    char buf[256];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%d,%.17g,%.17g\n", c.eps, c.alpha,
                      c.zero_count, c.zero_count_refined, c.b, c.min_reachable_h);
        os << buf;
    }
    return os.str();
}

UniformityTable uniformity_experiment(const DarbouxSystem& sys, const OneForm& eta,
                                      const std::vector<double>& eps_grid,
                                      const std::vector<double>& alpha_grid,
                                      const UniformityOptions& opt) {
    UniformityTable table;
    for (double eps : eps_grid) {
        for (double alpha : alpha_grid) {
            UnfoldingParams p{eps, alpha};
            NestInfo nest = interior_extremum(sys, p);
            UniformityCell cell;
            cell.eps = eps;
            cell.alpha = alpha;
            cell.b = nest.b;
            HGridSpec grid{opt.h_lo_frac * nest.b, opt.h_hi_frac * nest.b, opt.h_count, true};
            SweepResult coarse = sweep(sys, p, eta, grid, opt.sweep);
            HGridSpec grid2 = grid;
            grid2.count = 2 * opt.h_count;
            SweepResult fine = sweep(sys, p, eta, grid2, opt.sweep);
            cell.zero_count = int(coarse.zeros.size());
            cell.zero_count_refined = int(fine.zeros.size());
            cell.min_reachable_h = std::min(coarse.min_reachable_h, fine.min_reachable_h);
            table.cells.push_back(cell);
        }
    }
    for (const auto& c : table.cells) {
        table.max_count = std::max(table.max_count, c.zero_count);
        table.max_count_refined = std::max(table.max_count_refined, c.zero_count_refined);
    }
    table.stable = table.max_count == table.max_count_refined;
    return table;
}

VariationFitResult variation_fit(const DarbouxSystem& sys, const UnfoldingParams& p,
                                 const OneForm& eta, const VarSpec& spec,
                                 const std::vector<double>& h_samples, const NestInfo& nest,
                                 const VariationFitOptions& opt) {
    spec.validate();
    VariationFitResult out;
    out.min_degree = opt.min_degree;
    for (double h : h_samples) {
        Complex v = iterated_var(sys, p, eta, h, spec, nest, opt.var);
        out.h_samples.push_back(h);
        out.v_values.push_back(v);
        out.w_samples.push_back(-1.0 / omega_root(h, p.eps, p.alpha));
    }

    // Noise scale: the quadrature cancellation mass of the plain integral at
    // the largest sample sets the floor below which V is numerically zero.
    double vmax = 0.0;
    for (const auto& v : out.v_values) vmax = std::max(vmax, std::abs(v));
    {
        double h_ref = *std::max_element(out.h_samples.begin(), out.h_samples.end());
        Cycle ref = trace_oval(sys, p, nest, h_ref);
        QuadratureDiagnostics d;
        integrate_form(ref, sys, p, eta, opt.var.quad, &d);
        double noise = opt.noise_floor_rel * d.abs_mass;
        if (vmax <= noise || vmax == 0.0) {
            out.degenerate = true;
            out.residual_by_degree.assign(1, 0.0);
            return out;
        }
    }

    const size_t n = out.h_samples.size();
    auto design_row = [&](double w, int degree) {
        std::vector<double> row;
        for (int j = opt.min_degree; j <= degree; ++j) row.push_back(std::pow(w, j));
        return row;
    };
    std::vector<double> yv(n);
    for (size_t i = 0; i < n; ++i) yv[i] = out.v_values[i].real();

    double y_rms = 0.0;
    for (double v : yv) y_rms += v * v;
    y_rms = std::sqrt(y_rms / n);

    for (int degree = std::max(opt.min_degree, 0); degree <= opt.max_degree; ++degree) {
        std::vector<std::vector<double>> x;
        for (size_t i = 0; i < n; ++i) x.push_back(design_row(out.w_samples[i], degree));
        LinFit fit = ols(x, yv, x, yv);
        out.residual_by_degree.push_back(fit.rms / std::max(y_rms, 1e-300));
        if (degree == opt.max_degree) {
            out.coefficients.assign(fit.beta.size(), Complex(0, 0));
            for (size_t j = 0; j < fit.beta.size(); ++j) out.coefficients[j] = fit.beta[j];
        }
    }
    // Best degree: first reaching within 5% of the final residual.
    double final_res = out.residual_by_degree.back();
    out.best_degree = opt.max_degree;
    for (size_t d = 0; d < out.residual_by_degree.size(); ++d) {
        if (out.residual_by_degree[d] <= std::max(final_res * 1.05, final_res + 1e-15)) {
            out.best_degree = std::max(opt.min_degree, 0) + int(d);
            break;
        }
    }

    // Split-sample check: fit on even / odd sample halves, compare the two
    // fitted functions across the w-range.
    {
        std::vector<std::vector<double>> xa, xb;
        std::vector<double> ya, yb;
        for (size_t i = 0; i < n; ++i) {
            auto row = design_row(out.w_samples[i], opt.max_degree);
            if (i % 2 == 0) {
                xa.push_back(row);
                ya.push_back(yv[i]);
            } else {
                xb.push_back(row);
                yb.push_back(yv[i]);
            }
        }
        LinFit fa = ols(xa, ya, xa, ya);
        LinFit fb = ols(xb, yb, xb, yb);
        double gap = 0.0;
        double wa = *std::min_element(out.w_samples.begin(), out.w_samples.end());
        double wb = *std::max_element(out.w_samples.begin(), out.w_samples.end());
        for (int g = 0; g <= 64; ++g) {
            double w = wa + (wb - wa) * g / 64.0;
            auto row = design_row(w, opt.max_degree);
            double pa = 0, pb = 0;
            for (size_t j = 0; j < row.size(); ++j) {
                pa += row[j] * fa.beta[j];
                pb += row[j] * fb.beta[j];
            }
            gap = std::max(gap, std::abs(pa - pb));
        }
        out.split_disagreement = gap / std::max(vmax, 1e-300);
    }
    return out;
}

}  // namespace pai
