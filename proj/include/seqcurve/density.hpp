#ifndef SEQCURVE_DENSITY_HPP
#define SEQCURVE_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "binormal.hpp"
#include "empirical.hpp"
#include "normal.hpp"

namespace seqcurve {

// Gaussian kernel density estimate over a sorted prefix.
class KernelDensity {
public:
    KernelDensity(const std::vector<double>& sorted_data, double bandwidth)
        : data_(sorted_data), h_(bandwidth) {
        if (!(h_ > 0.0)) throw std::domain_error("KernelDensity: bandwidth must be positive");
    }

    double operator()(double x) const {
        double s = 0.0;
        for (double v : data_) s += norm_pdf((x - v) / h_);
        return s / (h_ * static_cast<double>(data_.size()));
    }

    double bandwidth() const { return h_; }

private:
    std::vector<double> data_;
    double h_;
};

// Sample quantile with linear interpolation between order statistics.
inline double interp_quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

// Silverman's rule-of-thumb: 0.9 min(sd, IQR/1.34) k^{-1/5}.
inline double silverman_bandwidth(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    double mean = 0.0;
    for (double v : sorted) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double iqr = interp_quantile(sorted, 0.75) - interp_quantile(sorted, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

// Everything the covariance formulas need at a percentile index u.
struct PctPoint {
    double x;        // F^{-1}(u)
    double f_D, f_Dbar, f;
    double F_D, F_Dbar;
    double ppv, npv;
};

// Density/curve supplier for the covariance engine.  The parametric flavor is
// exact; the kernel flavor plugs estimated densities into the same formulas.
class DensityOracle {
public:
    virtual ~DensityOracle() = default;
    virtual PctPoint at_percentile(double u) const = 0;
    virtual double roc(double t) const = 0;
    // density ratio f_D/f_Dbar at the control survival quantile S_Dbar^{-1}(t)
    virtual double density_ratio(double t) const = 0;
};

class BinormalOracle final : public DensityOracle {
public:
    BinormalOracle(const BinormalModel& model, double rho) : model_(model), rho_(rho) {}

    PctPoint at_percentile(double u) const override {
        PctPoint p;
        p.x = mixture_quantile_true(model_, rho_, u);
        p.f_D = model_.pdf_case(p.x);
        p.f_Dbar = model_.pdf_control(p.x);
        p.f = rho_ * p.f_D + (1.0 - rho_) * p.f_Dbar;
        p.F_D = model_.cdf_case(p.x);
        p.F_Dbar = model_.cdf_control(p.x);
        p.ppv = model_.surv_case(p.x) * rho_ / (1.0 - u);
        p.npv = (u - rho_) / u + ((1.0 - u) / u) * p.ppv;
        return p;
    }

    double roc(double t) const override {
        const double z = norm_quantile(1.0 - t);
        return norm_cdf((model_.mu_D - z) / model_.sigma_D);
    }

    double density_ratio(double t) const override {
        const double x = norm_quantile(1.0 - t); // S_Dbar^{-1}(t) for standard-normal controls
        return model_.pdf_case(x) / model_.pdf_control(x);
    }

private:
    BinormalModel model_;
    double rho_;
};

// Kernel plug-in oracle built from accrued data; the choice of estimator for
// f_D/f_Dbar is ours, so bandwidths are surfaced as metadata.
class KernelOracle final : public DensityOracle {
public:
    KernelOracle(const MarkerSample& sample, const SequentialView& view, double rho,
                 double bandwidth_D = 0.0, double bandwidth_Dbar = 0.0)
        : cases_(sample.cases, view.r_D),
          controls_(sample.controls, view.r_Dbar),
          rho_(rho),
          kde_D_(cases_.data(), bandwidth_D > 0.0 ? bandwidth_D : silverman_bandwidth(cases_.data())),
          kde_Dbar_(controls_.data(),
                    bandwidth_Dbar > 0.0 ? bandwidth_Dbar : silverman_bandwidth(controls_.data())) {
        if (cases_.size() < 10 || controls_.size() < 10)
            throw std::domain_error("kernel_density_plugin: each prefix needs >= 10 observations");
    }

    PctPoint at_percentile(double u) const override {
        PctPoint p;
        p.x = mixture_quantile_at(u);
        p.f_D = kde_D_(p.x);
        p.f_Dbar = kde_Dbar_(p.x);
        p.f = rho_ * p.f_D + (1.0 - rho_) * p.f_Dbar;
        p.F_D = cases_.ecdf(p.x);
        p.F_Dbar = controls_.ecdf(p.x);
        p.ppv = cases_.survival(p.x) * rho_ / (1.0 - u);
        p.npv = (u - rho_) / u + ((1.0 - u) / u) * p.ppv;
        return p;
    }

    double roc(double t) const override {
        return cases_.survival(controls_.survival_quantile(t));
    }

    double density_ratio(double t) const override {
        const double x = controls_.survival_quantile(t);
        return kde_D_(x) / kde_Dbar_(x);
    }

    double bandwidth_D() const { return kde_D_.bandwidth(); }
    double bandwidth_Dbar() const { return kde_Dbar_.bandwidth(); }

private:
    double mixture_quantile_at(double u) const {
        const auto& a = cases_.data();
        const auto& b = controls_.data();
        const double wa = rho_ / static_cast<double>(a.size());
        const double wb = (1.0 - rho_) / static_cast<double>(b.size());
        std::size_t i = 0, j = 0;
        double x = 0.0;
        while (i < a.size() || j < b.size()) {
            if (j >= b.size() || (i < a.size() && a[i] <= b[j])) x = a[i++];
            else x = b[j++];
            while (i < a.size() && a[i] == x) ++i;
            while (j < b.size() && b[j] == x) ++j;
            if (wa * static_cast<double>(i) + wb * static_cast<double>(j) >= u - 1e-12) return x;
        }
        return x;
    }

    SortedPrefix cases_;
    SortedPrefix controls_;
    double rho_;
    KernelDensity kde_D_;
    KernelDensity kde_Dbar_;
};

inline KernelOracle kernel_density_plugin(const MarkerSample& sample, const SequentialView& view,
                                          double rho, double bandwidth_D = 0.0,
                                          double bandwidth_Dbar = 0.0) {
    return KernelOracle(sample, view, rho, bandwidth_D, bandwidth_Dbar);
}

} // namespace seqcurve

#endif
