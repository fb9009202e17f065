#ifndef SEQCURVE_BINORMAL_HPP
#define SEQCURVE_BINORMAL_HPP

#include <cmath>
#include <stdexcept>

#include "empirical.hpp"
#include "normal.hpp"

namespace seqcurve {

// Parametric truth: controls are standard normal, cases are N(mu_D, sigma_D^2).
struct BinormalModel {
    double mu_D = 1.0;
    double sigma_D = 1.0;

    BinormalModel() = default;
    BinormalModel(double mu, double sigma) : mu_D(mu), sigma_D(sigma) {
        if (!(sigma_D > 0.0)) throw std::domain_error("BinormalModel: sigma_D must be positive");
    }

    double cdf_case(double x) const { return norm_cdf((x - mu_D) / sigma_D); }
    double cdf_control(double x) const { return norm_cdf(x); }
    double surv_case(double x) const { return norm_sf((x - mu_D) / sigma_D); }
    double surv_control(double x) const { return norm_sf(x); }
    double pdf_case(double x) const { return norm_pdf((x - mu_D) / sigma_D) / sigma_D; }
    double pdf_control(double x) const { return norm_pdf(x); }

    double mixture_cdf(double x, double rho) const {
        return rho * cdf_case(x) + (1.0 - rho) * cdf_control(x);
    }
    double mixture_pdf(double x, double rho) const {
        return rho * pdf_case(x) + (1.0 - rho) * pdf_control(x);
    }
};

// True mixture quantile F^{-1}(u): bisection on the strictly increasing two-term
// normal-CDF mixture, run to |F(x)-u| <= 1e-12.
inline double mixture_quantile_true(const BinormalModel& model, double rho, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("mixture_quantile_true: u must lie in (0,1)");
    double lo = std::min(0.0, model.mu_D) - 10.0 * std::max(1.0, model.sigma_D);
    double hi = std::max(0.0, model.mu_D) + 10.0 * std::max(1.0, model.sigma_D);
    while (model.mixture_cdf(lo, rho) > u) lo -= 10.0;
    while (model.mixture_cdf(hi, rho) < u) hi += 10.0;
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double f = model.mixture_cdf(mid, rho) - u;
        if (std::fabs(f) <= 1e-12) break;
        if (f < 0.0) lo = mid; else hi = mid;
    }
    return mid;
}

} // namespace seqcurve

#endif
