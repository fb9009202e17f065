#ifndef SEQCURVE_CURVES_HPP
#define SEQCURVE_CURVES_HPP

#include <stdexcept>

#include "binormal.hpp"
#include "empirical.hpp"
#include "normal.hpp"

namespace seqcurve {

enum class IndexKind { FPF, TPF, Percentile };

struct CurvePoint {
    double index;
    double value;
    IndexKind index_kind;
};

// ROC(t) = S_D(S_Dbar^{-1}(t)) = Phi((mu_D - z_{1-t})/sigma_D).
inline double roc_true(const BinormalModel& model, double t) {
    if (!(t > 0.0 && t < 1.0)) throw std::domain_error("roc_true: t must lie in (0,1)");
    const double z = norm_quantile(1.0 - t);
    return norm_cdf((model.mu_D - z) / model.sigma_D);
}

inline double roc_empirical(const MarkerSample& sample, const SequentialView& view, double t) {
    if (!(t > 0.0 && t < 1.0)) throw std::domain_error("roc_empirical: t must lie in (0,1)");
    const SortedPrefix cases(sample.cases, view.r_D);
    const SortedPrefix controls(sample.controls, view.r_Dbar);
    return cases.survival(controls.survival_quantile(t));
}

// ROC^{-1}(v) = S_Dbar(S_D^{-1}(v)): the FPF attaining TPF v.
inline double roc_inverse_empirical(const MarkerSample& sample, const SequentialView& view,
                                    double v) {
    if (!(v > 0.0 && v < 1.0)) throw std::domain_error("roc_inverse_empirical: v must lie in (0,1)");
    const SortedPrefix cases(sample.cases, view.r_D);
    const SortedPrefix controls(sample.controls, view.r_Dbar);
    return controls.survival(cases.survival_quantile(v));
}

// PPV(t) = ROC(t) rho / (ROC(t) rho + t (1-rho)).
inline double ppv_fpf(double roc_value, double t, double rho) {
    const double denom = roc_value * rho + t * (1.0 - rho);
    if (!(denom > 0.0)) throw std::domain_error("ppv_fpf: zero denominator");
    return roc_value * rho / denom;
}

// NPV(t) = (1-t)(1-rho) / ((1-ROC(t)) rho + (1-t)(1-rho)).
inline double npv_fpf(double roc_value, double t, double rho) {
    const double denom = (1.0 - roc_value) * rho + (1.0 - t) * (1.0 - rho);
    if (!(denom > 0.0)) throw std::domain_error("npv_fpf: zero denominator");
    return (1.0 - t) * (1.0 - rho) / denom;
}

inline double ppv_fpf_empirical(const MarkerSample& sample, const SequentialView& view,
                                const Prevalence& rho, double t) {
    return ppv_fpf(roc_empirical(sample, view, t), t, rho.rho);
}

inline double npv_fpf_empirical(const MarkerSample& sample, const SequentialView& view,
                                const Prevalence& rho, double t) {
    return npv_fpf(roc_empirical(sample, view, t), t, rho.rho);
}

// PPV(u) = S_D(F^{-1}(u)) rho / (1-u), with F the prevalence-weighted mixture.
inline double ppv_pct(const MarkerSample& sample, const SequentialView& view,
                      const Prevalence& rho, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("ppv_pct: u must lie in (0,1)");
    const double x = mixture_quantile(sample, view, rho, u);
    const SortedPrefix cases(sample.cases, view.r_D);
    return cases.survival(x) * rho.rho / (1.0 - u);
}

// NPV(u) = (u - rho)/u + ((1-u)/u) PPV(u): the exact linear tie between the curves.
inline double npv_from_ppv(double ppv, double u, double rho) {
    return (u - rho) / u + ((1.0 - u) / u) * ppv;
}

inline double npv_pct(const MarkerSample& sample, const SequentialView& view,
                      const Prevalence& rho, double u) {
    return npv_from_ppv(ppv_pct(sample, view, rho, u), u, rho.rho);
}

inline double ppv_pct_true(const BinormalModel& model, double rho, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("ppv_pct_true: u must lie in (0,1)");
    const double x = mixture_quantile_true(model, rho, u);
    return model.surv_case(x) * rho / (1.0 - u);
}

inline double npv_pct_true(const BinormalModel& model, double rho, double u) {
    return npv_from_ppv(ppv_pct_true(model, rho, u), u, rho);
}

} // namespace seqcurve

#endif
