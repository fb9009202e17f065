#ifndef SEQCURVE_GS_DESIGN_HPP
#define SEQCURVE_GS_DESIGN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "bvn.hpp"
#include "curves.hpp"
#include "density.hpp"
#include "montecarlo.hpp"
#include "threading.hpp"

namespace seqcurve {

// ---------------------------------------------------------------------------
// design specification
// ---------------------------------------------------------------------------

struct GSDesignSpec {
    double rho = 0.2;
    double u_npv = 0.6;     // percentile indexing the NPV endpoint
    double u_ppv = 0.9;     // percentile indexing the PPV endpoint
    double npv0 = 0.90, ppv0 = 0.80;   // null values
    double npv1 = 0.95, ppv1 = 0.90;   // alternative values
    double alpha = 0.05;    // overall two-sided convention; each Z uses z_{1-alpha/2}
    double power = 0.90;
    int J = 1;
    std::vector<double> info_fractions;  // default equally spaced
    double gamma_e = -3.4;  // Hwang-Shih-DeCani efficacy spending
    double gamma_f = -2.0;  // Hwang-Shih-DeCani futility spending
    double control_case_ratio = 1.0;

    std::vector<double> fractions() const {
        if (!info_fractions.empty()) {
            if (static_cast<int>(info_fractions.size()) != J)
                throw std::domain_error("GSDesignSpec: info_fractions must have J entries");
            double prev = 0.0;
            for (double s : info_fractions) {
                if (!(s > prev && s <= 1.0))
                    throw std::domain_error("GSDesignSpec: info_fractions must increase to 1");
                prev = s;
            }
            if (std::fabs(info_fractions.back() - 1.0) > 1e-12)
                throw std::domain_error("GSDesignSpec: last info fraction must be 1");
            return info_fractions;
        }
        std::vector<double> s(static_cast<std::size_t>(J));
        for (int k = 0; k < J; ++k) s[static_cast<std::size_t>(k)] = double(k + 1) / double(J);
        return s;
    }

    void validate() const {
        if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
        if (!(npv0 > 0.0 && npv0 < npv1 && npv1 < 1.0))
            throw std::domain_error("need 0 < npv0 < npv1 < 1");
        if (!(ppv0 > 0.0 && ppv0 < ppv1 && ppv1 < 1.0))
            throw std::domain_error("need 0 < ppv0 < ppv1 < 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0,1)");
        if (!(power > 0.5 && power < 1.0)) throw std::domain_error("power must lie in (0.5,1)");
        if (J < 1) throw std::domain_error("J must be >= 1");
        if (!(control_case_ratio > 0.0)) throw std::domain_error("ratio must be positive");
        fractions();
    }
};

struct Boundaries {
    std::vector<double> efficacy;  // z-scale upper boundaries, per look
    std::vector<double> futility;  // z-scale lower boundaries, per look
    double drift = 0.0;            // Brownian drift attaining the target power
    double inflation = 1.0;        // (drift / fixed-sample drift)^2
};

struct OperatingCharacteristics {
    double p_reject = 0.0;
    double expected_n_D = 0.0;
    std::vector<double> stop_prob;  // per look (efficacy or futility combined)
    std::string label;
};

// ---------------------------------------------------------------------------
// small numerics: Brent root finder, Hwang-Shih-DeCani spending
// ---------------------------------------------------------------------------

namespace detail {

inline double brent_root(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-10, int maxit = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::runtime_error("brent_root: root not bracketed");
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < maxit; ++it) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * 1e-16 * std::fabs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
    }
    return b;
}

} // namespace detail

// Cumulative error spend at information fraction s.
inline double hsd_spend(double gamma, double s, double total) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return total;
    if (gamma == 0.0) return total * s;
    return total * (1.0 - std::exp(-gamma * s)) / (1.0 - std::exp(-gamma));
}

// ---------------------------------------------------------------------------
// boundary recursion for a Brownian statistic with drift
// ---------------------------------------------------------------------------

namespace detail {

// Subdensity of the continuing Brownian path on a Simpson grid over the current
// continuation region; the standard group-sequential recursion.
struct GSGrid {
    std::vector<double> y;   // x-scale support points
    std::vector<double> w;   // Simpson weights
    std::vector<double> f0;  // subdensity under drift 0
    std::vector<double> f1;  // subdensity under the design drift
};

inline void simpson_grid(double lo, double hi, std::size_t n, std::vector<double>& y,
                         std::vector<double>& w) {
    if (n % 2 == 0) ++n;
    y.resize(n);
    w.resize(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = lo + h * static_cast<double>(i);
        w[i] = (i == 0 || i == n - 1) ? h / 3.0 : ((i % 2) ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    }
}

struct BoundarySolve {
    std::vector<double> u, l;  // z-scale boundaries
    double final_gap = 0.0;    // u_J - l_J before any reconciliation
};

// Solve per-look boundaries so the cumulative efficacy spend (under drift 0) and
// futility spend (under drift Delta) match the HSD schedules; binding futility.
inline BoundarySolve solve_boundaries(const std::vector<double>& frac, double alpha1, double beta,
                                      double gamma_e, double gamma_f, double Delta,
                                      std::size_t ngrid = 2001) {
    const std::size_t J = frac.size();
    BoundarySolve out;
    out.u.resize(J);
    out.l.resize(J);
    GSGrid g;
    double prev_e = 0.0, prev_f = 0.0, prev_s = 0.0;
    for (std::size_t k = 0; k < J; ++k) {
        const double s = frac[k];
        const double sq = std::sqrt(s);
        const double e_inc = hsd_spend(gamma_e, s, alpha1) - prev_e;
        const double f_inc = hsd_spend(gamma_f, s, beta) - prev_f;
        prev_e += e_inc;
        prev_f += f_inc;
        double c, d; // x-scale efficacy/futility boundaries at this look
        if (k == 0) {
            c = sq * norm_quantile(1.0 - e_inc);
            d = Delta * s + sq * norm_quantile(f_inc);
        } else {
            const double delta_s = s - prev_s;
            const double sqd = std::sqrt(delta_s);
            auto upper = [&](double x) {
                double p = 0.0;
                for (std::size_t i = 0; i < g.y.size(); ++i)
                    p += g.w[i] * g.f0[i] * norm_sf((x - g.y[i]) / sqd);
                return p - e_inc;
            };
            auto lower = [&](double x) {
                double p = 0.0;
                for (std::size_t i = 0; i < g.y.size(); ++i)
                    p += g.w[i] * g.f1[i] * norm_cdf((x - g.y[i] - Delta * delta_s) / sqd);
                return p - f_inc;
            };
            // continuing mass must exceed the increment to be spent; if not, the
            // drift is far beyond the binding design -- report a negative gap so
            // the drift solve backs off (the root always lies before this regime)
            if (upper(-20.0) <= 0.0 || lower(20.0) <= 0.0) {
                out.final_gap = -10.0;
                return out;
            }
            c = brent_root(upper, -20.0, 20.0, 1e-12);
            d = brent_root(lower, -20.0, 20.0, 1e-12);
        }
        out.u[k] = c / sq;
        out.l[k] = d / sq; // at the final look d may exceed c: a signed gap
        if (k + 1 < J) {
            if (d > c) { // continuation region vanished before the final look
                out.final_gap = -10.0;
                return out;
            }
            // advance the continuing-path subdensities onto a fresh grid over [d, c]
            GSGrid next;
            simpson_grid(d, c, ngrid, next.y, next.w);
            const std::size_t n = next.y.size();
            next.f0.resize(n);
            next.f1.resize(n);
            if (k == 0) {
                for (std::size_t i = 0; i < n; ++i) {
                    next.f0[i] = norm_pdf(next.y[i] / sq) / sq;
                    next.f1[i] = norm_pdf((next.y[i] - Delta * s) / sq) / sq;
                }
            } else {
                const double delta_s = s - prev_s;
                const double sqd = std::sqrt(delta_s);
                for (std::size_t i = 0; i < n; ++i) {
                    double a0 = 0.0, a1 = 0.0;
                    for (std::size_t j = 0; j < g.y.size(); ++j) {
                        a0 += g.w[j] * g.f0[j] * norm_pdf((next.y[i] - g.y[j]) / sqd);
                        a1 += g.w[j] * g.f1[j] *
                              norm_pdf((next.y[i] - g.y[j] - Delta * delta_s) / sqd);
                    }
                    next.f0[i] = a0 / sqd;
                    next.f1[i] = a1 / sqd;
                }
            }
            g = std::move(next);
        }
        prev_s = s;
    }
    out.final_gap = out.u[J - 1] - out.l[J - 1];
    return out;
}

// Per-look efficacy crossing probabilities for given boundaries under a drift;
// futility is binding (paths below l stop and can never reject later).
inline std::vector<double> upper_crossing_probs(const std::vector<double>& frac,
                                                const std::vector<double>& u,
                                                const std::vector<double>& l, double Delta,
                                                std::size_t ngrid = 2001) {
    const std::size_t J = frac.size();
    std::vector<double> probs(J, 0.0);
    GSGrid g;
    double prev_s = 0.0;
    for (std::size_t k = 0; k < J; ++k) {
        const double s = frac[k];
        const double sq = std::sqrt(s);
        const double c = u[k] * sq;
        const double d = std::min(l[k] * sq, c);
        if (k == 0) {
            probs[0] = norm_sf((c - Delta * s) / sq);
        } else {
            const double delta_s = s - prev_s;
            const double sqd = std::sqrt(delta_s);
            double p = 0.0;
            for (std::size_t i = 0; i < g.y.size(); ++i)
                p += g.w[i] * g.f1[i] * norm_sf((c - g.y[i] - Delta * delta_s) / sqd);
            probs[k] = p;
        }
        if (k + 1 < J) {
            GSGrid next;
            simpson_grid(d, c, ngrid, next.y, next.w);
            const std::size_t n = next.y.size();
            next.f1.resize(n);
            next.f0.assign(n, 0.0);
            if (k == 0) {
                for (std::size_t i = 0; i < n; ++i)
                    next.f1[i] = norm_pdf((next.y[i] - Delta * s) / sq) / sq;
            } else {
                const double delta_s = s - prev_s;
                const double sqd = std::sqrt(delta_s);
                for (std::size_t i = 0; i < n; ++i) {
                    double a = 0.0;
                    for (std::size_t j = 0; j < g.y.size(); ++j)
                        a += g.w[j] * g.f1[j] *
                             norm_pdf((next.y[i] - g.y[j] - Delta * delta_s) / sqd);
                    next.f1[i] = a / sqd;
                }
            }
            g = std::move(next);
        }
        prev_s = s;
    }
    return probs;
}

} // namespace detail

// Boundaries matching the spending schedules, with the drift solved so the
// efficacy and futility boundaries meet at the final look (binding design).
inline Boundaries boundaries_from_spending(const GSDesignSpec& spec) {
    spec.validate();
    const double alpha1 = spec.alpha / 2.0;
    const double beta = 1.0 - spec.power;
    const double delta_fixed = norm_quantile(1.0 - alpha1) + norm_quantile(spec.power);
    Boundaries out;
    if (spec.J == 1) {
        out.efficacy = {norm_quantile(1.0 - alpha1)};
        out.futility = out.efficacy;
        out.drift = delta_fixed;
        out.inflation = 1.0;
        return out;
    }
    const std::vector<double> frac = spec.fractions();
    auto gap = [&](double Delta) {
        return detail::solve_boundaries(frac, alpha1, beta, spec.gamma_e, spec.gamma_f, Delta)
            .final_gap;
    };
    double lo = delta_fixed * 0.9, hi = delta_fixed * 1.6;
    while (gap(lo) < 0.0 && lo > 0.1) lo *= 0.9;
    while (gap(hi) > 0.0 && hi < delta_fixed * 4.0) hi *= 1.1;
    const double drift = detail::brent_root(gap, lo, hi, 1e-8);
    auto solved = detail::solve_boundaries(frac, alpha1, beta, spec.gamma_e, spec.gamma_f, drift);
    // reconcile the (already ~1e-8) final-look gap exactly
    const double final_z = 0.5 * (solved.u.back() + solved.l.back());
    solved.u.back() = final_z;
    solved.l.back() = final_z;
    out.efficacy = solved.u;
    out.futility = solved.l;
    out.drift = drift;
    out.inflation = (drift / delta_fixed) * (drift / delta_fixed);
    return out;
}

// ---------------------------------------------------------------------------
// model calibration and sample size
// ---------------------------------------------------------------------------

// Solve npv_pct_true(u1)=npv_target, ppv_pct_true(u2)=ppv_target for (mu_D, sigma_D)
// by damped Newton on (mu, log sigma); residuals <= 1e-9 or an error is raised.
inline BinormalModel calibrate_binormal(double rho, double u1, double npv_target, double u2,
                                        double ppv_target) {
    if (std::fabs(npv_target - (1.0 - rho)) < 1e-12 && std::fabs(ppv_target - rho) < 1e-12)
        return BinormalModel(0.0, 1.0); // no-information fixed point; sigma by convention
    double mu = 1.0, ls = 0.0;
    auto residual = [&](double m, double s, double& r1, double& r2) {
        const BinormalModel model(m, std::exp(s));
        r1 = npv_pct_true(model, rho, u1) - npv_target;
        r2 = ppv_pct_true(model, rho, u2) - ppv_target;
    };
    double r1, r2;
    residual(mu, ls, r1, r2);
    for (int iter = 0; iter < 100; ++iter) {
        double norm0 = std::max(std::fabs(r1), std::fabs(r2));
        if (norm0 <= 1e-10) break;
        const double h = 1e-6;
        double a1, a2, b1, b2;
        residual(mu + h, ls, a1, a2);
        residual(mu, ls + h, b1, b2);
        const double j11 = (a1 - r1) / h, j12 = (b1 - r1) / h;
        const double j21 = (a2 - r2) / h, j22 = (b2 - r2) / h;
        const double det = j11 * j22 - j12 * j21;
        if (std::fabs(det) < 1e-14)
            throw std::runtime_error("calibrate_binormal: singular Jacobian");
        double dmu = -(j22 * r1 - j12 * r2) / det;
        double dls = -(-j21 * r1 + j11 * r2) / det;
        double step = 1.0;
        for (int half = 0; half < 40; ++half) {
            double t1, t2;
            residual(mu + step * dmu, ls + step * dls, t1, t2);
            if (std::max(std::fabs(t1), std::fabs(t2)) < norm0) {
                mu += step * dmu;
                ls += step * dls;
                r1 = t1;
                r2 = t2;
                break;
            }
            step *= 0.5;
            if (half == 39)
                throw std::runtime_error(
                    "calibrate_binormal: no descent step; residual " + std::to_string(norm0));
        }
    }
    if (std::max(std::fabs(r1), std::fabs(r2)) > 1e-9)
        throw std::runtime_error("calibrate_binormal: targets infeasible; residual " +
                                 std::to_string(std::max(std::fabs(r1), std::fabs(r2))));
    return BinormalModel(mu, std::exp(ls));
}

namespace detail {

// Design-time moments at full information for sample size n_D: null-hypothesis SEs
// pair the alternative model's densities with the null curve values.
struct JointMoments {
    double mean_npv, mean_ppv; // of the Z statistics under the alternative
    double sd_npv, sd_ppv;     // of the Z statistics under the alternative
    double corr;               // between the two Z statistics
};

inline JointMoments joint_moments(const GSDesignSpec& spec, const BinormalModel& alt_model,
                                  std::size_t n_D) {
    const BinormalOracle oracle(alt_model, spec.rho);
    const auto n_Dbar =
        static_cast<std::size_t>(std::llround(static_cast<double>(n_D) * spec.control_case_ratio));
    const StudyShape shape(n_D, std::max<std::size_t>(1, n_Dbar));
    const double nd = static_cast<double>(shape.n_D);
    const double ndbar = static_cast<double>(shape.n_Dbar);
    const PctPoint pn = oracle.at_percentile(spec.u_npv);
    const PctPoint pp = oracle.at_percentile(spec.u_ppv);
    const double se0_npv = std::sqrt(
        npv_pct_var_display(spec.npv0, spec.u_npv, spec.rho, pn.f_D, pn.f_Dbar, pn.f, nd, ndbar));
    const double se0_ppv = std::sqrt(
        ppv_pct_var_display(spec.ppv0, spec.u_ppv, spec.rho, pp.f_D, pp.f_Dbar, pp.f, nd, ndbar));
    const double se1_npv = std::sqrt(
        npv_pct_var_display(spec.npv1, spec.u_npv, spec.rho, pn.f_D, pn.f_Dbar, pn.f, nd, ndbar));
    const double se1_ppv = std::sqrt(
        ppv_pct_var_display(spec.ppv1, spec.u_ppv, spec.rho, pp.f_D, pp.f_Dbar, pp.f, nd, ndbar));
    const SequentialView full{1.0, 1.0};
    const double cross =
        ppv_npv_cross_cov(oracle, spec.rho, spec.u_ppv, spec.u_npv, full, full, shape);
    JointMoments m;
    m.mean_npv = (spec.npv1 - spec.npv0) / se0_npv;
    m.mean_ppv = (spec.ppv1 - spec.ppv0) / se0_ppv;
    m.sd_npv = se1_npv / se0_npv;
    m.sd_ppv = se1_ppv / se0_ppv;
    m.corr = cross / (se1_ppv * se1_npv);
    return m;
}

} // namespace detail

// Joint probability that both Z statistics clear z_{1-alpha/2} at sample size n_D.
inline double joint_power(const GSDesignSpec& spec, std::size_t n_D) {
    spec.validate();
    const BinormalModel alt =
        calibrate_binormal(spec.rho, spec.u_npv, spec.npv1, spec.u_ppv, spec.ppv1);
    const auto m = detail::joint_moments(spec, alt, n_D);
    const double z = norm_quantile(1.0 - spec.alpha / 2.0);
    return bvn_upper_prob((z - m.mean_npv) / m.sd_npv, (z - m.mean_ppv) / m.sd_ppv, m.corr);
}

// Smallest n_D attaining the power target in a single-look design.
inline std::size_t fixed_sample_size(const GSDesignSpec& spec) {
    spec.validate();
    std::size_t lo = 2, hi = 64;
    while (joint_power(spec, hi) < spec.power) {
        lo = hi;
        hi *= 2;
        if (hi > 10000000) throw std::runtime_error("fixed_sample_size: power unreachable");
    }
    while (lo + 1 < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (joint_power(spec, mid) >= spec.power) hi = mid;
        else lo = mid;
    }
    return hi;
}

// Fixed-sample size times the group-sequential inflation factor, rounded up.
inline std::size_t max_sample_size(const GSDesignSpec& spec) {
    const std::size_t n_fixed = fixed_sample_size(spec);
    if (spec.J == 1) return n_fixed;
    const Boundaries b = boundaries_from_spending(spec);
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n_fixed) * b.inflation));
}

// ---------------------------------------------------------------------------
// interim test statistics and operating characteristics
// ---------------------------------------------------------------------------

namespace detail {

// One look's Z statistics from sorted prefixes: kernel plug-in densities at the
// estimated mixture quantiles, null curve values inside the variance displays.
inline std::pair<double, double> look_z(const std::vector<double>& cases_sorted,
                                        const std::vector<double>& controls_sorted,
                                        const GSDesignSpec& spec) {
    const double rho = spec.rho;
    const double kd = static_cast<double>(cases_sorted.size());
    const double kdbar = static_cast<double>(controls_sorted.size());
    const KernelDensity kde_D(cases_sorted, silverman_bandwidth(cases_sorted));
    const KernelDensity kde_Dbar(controls_sorted, silverman_bandwidth(controls_sorted));
    auto mix_quantile = [&](double u) {
        const double wa = rho / kd, wb = (1.0 - rho) / kdbar;
        std::size_t i = 0, j = 0;
        double x = 0.0;
        while (i < cases_sorted.size() || j < controls_sorted.size()) {
            if (j >= controls_sorted.size() ||
                (i < cases_sorted.size() && cases_sorted[i] <= controls_sorted[j]))
                x = cases_sorted[i++];
            else
                x = controls_sorted[j++];
            while (i < cases_sorted.size() && cases_sorted[i] == x) ++i;
            while (j < controls_sorted.size() && controls_sorted[j] == x) ++j;
            if (wa * static_cast<double>(i) + wb * static_cast<double>(j) >= u - 1e-12) return x;
        }
        return x;
    };
    auto case_survival = [&](double x) {
        const auto it = std::upper_bound(cases_sorted.begin(), cases_sorted.end(), x);
        return 1.0 - static_cast<double>(it - cases_sorted.begin()) / kd;
    };

    const double x_npv = mix_quantile(spec.u_npv);
    const double ppv_at_unpv = case_survival(x_npv) * rho / (1.0 - spec.u_npv);
    const double npv_hat = npv_from_ppv(ppv_at_unpv, spec.u_npv, rho);
    double fd = kde_D(x_npv), fdbar = kde_Dbar(x_npv);
    double f = rho * fd + (1.0 - rho) * fdbar;
    const double se_npv = std::sqrt(
        npv_pct_var_display(spec.npv0, spec.u_npv, rho, fd, fdbar, f, kd, kdbar));

    const double x_ppv = mix_quantile(spec.u_ppv);
    const double ppv_hat = case_survival(x_ppv) * rho / (1.0 - spec.u_ppv);
    fd = kde_D(x_ppv);
    fdbar = kde_Dbar(x_ppv);
    f = rho * fd + (1.0 - rho) * fdbar;
    const double se_ppv = std::sqrt(
        ppv_pct_var_display(spec.ppv0, spec.u_ppv, rho, fd, fdbar, f, kd, kdbar));

    return {(npv_hat - spec.npv0) / se_npv, (ppv_hat - spec.ppv0) / se_ppv};
}

} // namespace detail

// Standardized interim statistics (Z_NPV, Z_PPV) at the given accrual view.
inline std::pair<double, double> z_statistics(const MarkerSample& sample,
                                              const SequentialView& view, double rho,
                                              GSDesignSpec spec) {
    spec.rho = rho;
    const SortedPrefix cases(sample.cases, view.r_D);
    const SortedPrefix controls(sample.controls, view.r_Dbar);
    if (cases.size() < 10 || controls.size() < 10)
        throw std::domain_error("z_statistics: each prefix needs >= 10 observations");
    return detail::look_z(cases.data(), controls.data(), spec);
}

// Simulated operating characteristics of the group-sequential design when the
// truth has curve values (npv_true, ppv_true): joint rule, binding futility.
inline OperatingCharacteristics simulate_oc(const GSDesignSpec& spec, double npv_true,
                                            double ppv_true, std::size_t reps, std::uint64_t seed,
                                            unsigned threads = 0) {
    spec.validate();
    if (reps == 0) throw std::domain_error("simulate_oc: reps must be positive");
    const BinormalModel truth =
        calibrate_binormal(spec.rho, spec.u_npv, npv_true, spec.u_ppv, ppv_true);
    const Boundaries bounds = boundaries_from_spending(spec);
    const std::size_t n_max = max_sample_size(spec);
    const std::vector<double> frac = spec.fractions();
    const std::size_t J = frac.size();
    std::vector<std::size_t> look_nd(J), look_ndbar(J);
    for (std::size_t k = 0; k < J; ++k) {
        look_nd[k] = static_cast<std::size_t>(std::ceil(static_cast<double>(n_max) * frac[k] - 1e-9));
        look_ndbar[k] = static_cast<std::size_t>(std::ceil(
            static_cast<double>(n_max) * spec.control_case_ratio * frac[k] - 1e-9));
    }
    look_nd[J - 1] = n_max;

    std::vector<std::uint8_t> rejected(reps, 0);
    std::vector<std::uint8_t> stop_look(reps, 0);
    parallel_for(reps, threads, [&](std::size_t r) {
        Philox rng(seed, r);
        std::vector<double> cases(look_nd[J - 1]), controls(look_ndbar[J - 1]);
        for (auto& v : cases) v = truth.mu_D + truth.sigma_D * rng.next_normal();
        for (auto& v : controls) v = rng.next_normal();
        std::vector<double> cs, os;
        for (std::size_t k = 0; k < J; ++k) {
            cs.assign(cases.begin(), cases.begin() + static_cast<std::ptrdiff_t>(look_nd[k]));
            os.assign(controls.begin(),
                      controls.begin() + static_cast<std::ptrdiff_t>(look_ndbar[k]));
            std::sort(cs.begin(), cs.end());
            std::sort(os.begin(), os.end());
            const auto [z_npv, z_ppv] = detail::look_z(cs, os, spec);
            const double zmin = std::min(z_npv, z_ppv);
            if (zmin >= bounds.efficacy[k]) {
                rejected[r] = 1;
                stop_look[r] = static_cast<std::uint8_t>(k);
                return;
            }
            if (zmin <= bounds.futility[k] || k + 1 == J) {
                stop_look[r] = static_cast<std::uint8_t>(k);
                return;
            }
        }
    });

    OperatingCharacteristics oc;
    oc.stop_prob.assign(J, 0.0);
    std::size_t reject_count = 0;
    double en = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        reject_count += rejected[r];
        oc.stop_prob[stop_look[r]] += 1.0;
        en += static_cast<double>(look_nd[stop_look[r]]);
    }
    for (auto& p : oc.stop_prob) p /= static_cast<double>(reps);
    oc.p_reject = static_cast<double>(reject_count) / static_cast<double>(reps);
    oc.expected_n_D = en / static_cast<double>(reps);
    return oc;
}

} // namespace seqcurve

#endif
