#ifndef SEQCURVE_ASYMPTOTICS_HPP
#define SEQCURVE_ASYMPTOTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "curves.hpp"
#include "density.hpp"
#include "linalg.hpp"

namespace seqcurve {

struct StudyShape {
    std::size_t n_D;
    std::size_t n_Dbar;
    StudyShape(std::size_t nd, std::size_t ndbar) : n_D(nd), n_Dbar(ndbar) {
        if (n_D == 0 || n_Dbar == 0) throw std::domain_error("StudyShape: sizes must be positive");
    }
    double lambda() const { return static_cast<double>(n_D) / static_cast<double>(n_Dbar); }
};

// One covariance query: an index point (t or u) observed at accrual (r_D, r_Dbar).
struct CovProbe {
    double index;
    double r_D;
    double r_Dbar;
};

// Kiefer process covariance: Brownian bridge in the index, Brownian motion in time.
inline double kiefer_cov(double t1, double r1, double t2, double r2) {
    if (t1 < 0.0 || t1 > 1.0 || t2 < 0.0 || t2 > 1.0 || r1 < 0.0 || r2 < 0.0)
        throw std::domain_error("kiefer_cov: t in [0,1], r >= 0 required");
    return (std::min(t1, t2) - t1 * t2) * std::min(r1, r2);
}

inline void check_probes(const std::vector<CovProbe>& probes) {
    for (const auto& p : probes)
        if (!(p.index > 0.0 && p.index < 1.0) || !(p.r_D > 0.0 && p.r_D <= 1.0) ||
            !(p.r_Dbar > 0.0 && p.r_Dbar <= 1.0))
            throw std::domain_error("CovProbe: index in (0,1) and r fractions in (0,1] required");
}

inline void validate_psd(Matrix& m) {
    if (m.max_asymmetry() > 1e-12)
        throw std::runtime_error("covariance matrix asymmetric beyond tolerance");
    m.symmetrize();
    if (m.size() > 1 && min_eigenvalue(m) < -1e-9)
        throw std::runtime_error("covariance matrix not positive semidefinite");
}

// Covariance of the scaled process R_{r_D,r_Dbar}(t): a case-arm Kiefer bridge in
// ROC(t) plus an independent control-arm term weighted by the density ratio.
inline Matrix roc_process_cov(const DensityOracle& oracle, const std::vector<CovProbe>& probes,
                              double lambda) {
    check_probes(probes);
    const std::size_t m = probes.size();
    std::vector<double> roc(m), q(m);
    for (std::size_t i = 0; i < m; ++i) {
        roc[i] = oracle.roc(probes[i].index);
        q[i] = oracle.density_ratio(probes[i].index);
        if (!std::isfinite(q[i])) throw std::runtime_error("density ratio not finite at probe");
    }
    Matrix out(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const auto& pi = probes[i];
            const auto& pj = probes[j];
            const double bridge_case = kiefer_cov(roc[i], pi.r_D, roc[j], pj.r_D);
            const double bridge_ctrl = kiefer_cov(pi.index, pi.r_Dbar, pj.index, pj.r_Dbar);
            out(i, j) = bridge_case +
                        lambda * q[i] * q[j] * (pi.r_D * pj.r_D) / (pi.r_Dbar * pj.r_Dbar) *
                            bridge_ctrl;
        }
    }
    validate_psd(out);
    return out;
}

// Estimator-scale covariance of the ROC points themselves: process scale divided
// by (n_D r_i)(n_D r_j)/n_D.
inline Matrix roc_estimator_cov(const DensityOracle& oracle, const std::vector<CovProbe>& probes,
                                const StudyShape& shape) {
    Matrix out = roc_process_cov(oracle, probes, shape.lambda());
    const double nd = static_cast<double>(shape.n_D);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j)
            out(i, j) /= nd * probes[i].r_D * probes[j].r_D;
    return out;
}

// Delta-method factor carrying ROC covariances to PPV-by-FPF covariances.
inline double ppv_fpf_delta(double roc_value, double t, double rho) {
    const double denom = roc_value * rho + t * (1.0 - rho);
    return t * (1.0 - rho) * rho / (denom * denom);
}

inline Matrix ppv_fpf_cov(const DensityOracle& oracle, double rho,
                          const std::vector<CovProbe>& probes, const StudyShape& shape) {
    Matrix out = roc_estimator_cov(oracle, probes, shape);
    std::vector<double> delta(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i)
        delta[i] = ppv_fpf_delta(oracle.roc(probes[i].index), probes[i].index, rho);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out(i, j) *= delta[i] * delta[j];
    return out;
}

namespace detail {

// Coefficients of the percentile-indexed PPV limit process at one index point:
// the process is -A(u) K1(g(u), r_D) + B(u) sqrt(lambda) (r_D/r_Dbar) K2(h(u), r_Dbar)
// with g = F_D(F^{-1}(u)), h = F_Dbar(F^{-1}(u)).
struct PctCoef {
    double A, B, g, h;
};

inline PctCoef pct_coef(const PctPoint& p, double rho, double u) {
    if (!(p.f > 0.0)) throw std::runtime_error("mixture density vanishes at probe");
    PctCoef c;
    const double scale = rho * (1.0 - rho) / (1.0 - u);
    c.A = scale * p.f_Dbar / p.f;
    c.B = scale * p.f_D / p.f;
    c.g = p.F_D;
    c.h = p.F_Dbar;
    return c;
}

// Estimator-scale covariance of PPV(u) points: case- and control-arm Kiefer terms
// with the delta-method coefficients above.
inline double ppv_pct_cov_entry(const PctCoef& ci, const CovProbe& pi, const PctCoef& cj,
                                const CovProbe& pj, const StudyShape& shape) {
    const double nd = static_cast<double>(shape.n_D);
    const double ndbar = static_cast<double>(shape.n_Dbar);
    const double term_case = ci.A * cj.A * kiefer_cov(ci.g, pi.r_D, cj.g, pj.r_D) /
                             (nd * pi.r_D * pj.r_D);
    const double term_ctrl = ci.B * cj.B * kiefer_cov(ci.h, pi.r_Dbar, cj.h, pj.r_Dbar) /
                             (ndbar * pi.r_Dbar * pj.r_Dbar);
    return term_case + term_ctrl;
}

} // namespace detail

inline Matrix ppv_pct_cov(const DensityOracle& oracle, double rho,
                          const std::vector<CovProbe>& probes, const StudyShape& shape) {
    check_probes(probes);
    const std::size_t m = probes.size();
    std::vector<detail::PctCoef> coef(m);
    for (std::size_t i = 0; i < m; ++i)
        coef[i] = detail::pct_coef(oracle.at_percentile(probes[i].index), rho, probes[i].index);
    Matrix out(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out(i, j) = detail::ppv_pct_cov_entry(coef[i], probes[i], coef[j], probes[j], shape);
    validate_psd(out);
    return out;
}

// NPV(u) deviations are the exact linear image ((1-u)/u) of PPV(u) deviations.
inline Matrix npv_pct_cov(const DensityOracle& oracle, double rho,
                          const std::vector<CovProbe>& probes, const StudyShape& shape) {
    Matrix out = ppv_pct_cov(oracle, rho, probes, shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j)
            out(i, j) *= ((1.0 - probes[i].index) / probes[i].index) *
                         ((1.0 - probes[j].index) / probes[j].index);
    return out;
}

inline double ppv_pct_var(const DensityOracle& oracle, double rho, double u, double r_D,
                          double r_Dbar, const StudyShape& shape) {
    const std::vector<CovProbe> probes{{u, r_D, r_Dbar}};
    return ppv_pct_cov(oracle, rho, probes, shape)(0, 0);
}

inline double npv_pct_var(const DensityOracle& oracle, double rho, double u, double r_D,
                          double r_Dbar, const StudyShape& shape) {
    const double s = (1.0 - u) / u;
    return s * s * ppv_pct_var(oracle, rho, u, r_D, r_Dbar, shape);
}

// Cov[PPV(u1), NPV(u2)]: the NPV side is the ((1-u2)/u2)-scaled PPV deviation.
inline double ppv_npv_cross_cov(const DensityOracle& oracle, double rho, double u1, double u2,
                                const SequentialView& view1, const SequentialView& view2,
                                const StudyShape& shape) {
    const std::vector<CovProbe> probes{{u1, view1.r_D, view1.r_Dbar},
                                       {u2, view2.r_D, view2.r_Dbar}};
    check_probes(probes);
    const auto c1 = detail::pct_coef(oracle.at_percentile(u1), rho, u1);
    const auto c2 = detail::pct_coef(oracle.at_percentile(u2), rho, u2);
    const double cov_pp = detail::ppv_pct_cov_entry(c1, probes[0], c2, probes[1], shape);
    return ((1.0 - u2) / u2) * cov_pp;
}

// Direct mean-variance display forms.  These take the curve values explicitly so
// callers may studentize around hypothesized (e.g. null) values; they agree with
// the Kiefer-form diagonal to 1e-10 when fed the oracle's own curve values.
inline double ppv_pct_var_display(double ppv, double u, double rho, double f_D, double f_Dbar,
                                  double f, double nr_D, double nr_Dbar) {
    const double a = f_Dbar * (1.0 - rho) / f;
    const double b = f_D * rho / f;
    return a * a * ppv * (rho / (1.0 - u) - ppv) / nr_D +
           b * b * (1.0 - ppv) * ((u - rho) / (1.0 - u) + ppv) / nr_Dbar;
}

inline double npv_pct_var_display(double npv, double u, double rho, double f_D, double f_Dbar,
                                  double f, double nr_D, double nr_Dbar) {
    const double a = f_Dbar * (1.0 - rho) / f;
    const double b = f_D * rho / f;
    return a * a * (npv + (rho - u) / u) * (1.0 - npv) / nr_D +
           b * b * npv * ((1.0 - rho) / u - npv) / nr_Dbar;
}

} // namespace seqcurve

#endif
