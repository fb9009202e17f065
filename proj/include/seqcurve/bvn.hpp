#ifndef SEQCURVE_BVN_HPP
#define SEQCURVE_BVN_HPP

#include <array>
#include <cmath>
#include <stdexcept>

#include "normal.hpp"

namespace seqcurve {

namespace detail {

// 61-point Gauss-Legendre nodes/weights on [-1,1], generated by Newton iteration
// on the Legendre polynomial (done once, cached).
struct GaussLegendre61 {
    std::array<double, 61> node{};
    std::array<double, 61> weight{};
    GaussLegendre61() {
        const int n = 61;
        for (int i = 0; i < n; ++i) {
            // Chebyshev-like initial guess for the i-th root
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                pp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / pp;
                x -= dx;
                if (std::fabs(dx) < 1e-15) break;
            }
            node[i] = x;
            weight[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        }
    }
};

inline const GaussLegendre61& gl61() {
    static const GaussLegendre61 table;
    return table;
}

} // namespace detail

// P(X > a, Y > b) for standard bivariate normal with correlation corr, by
// tensor-product Gauss-Legendre quadrature over the (truncated) rectangle.
inline double bvn_upper_prob(double a, double b, double corr) {
    if (!(corr > -1.0 && corr < 1.0))
        throw std::domain_error("bvn_upper_prob: correlation must lie in (-1,1)");
    const double cap = 9.0; // mass beyond 9 sigma is ~1e-19
    if (a >= cap || b >= cap) return 0.0;
    const double alo = std::max(a, -cap);
    const double blo = std::max(b, -cap);
    const auto& gl = detail::gl61();
    const double cx = 0.5 * (cap - alo), mx = 0.5 * (cap + alo);
    const double cy = 0.5 * (cap - blo), my = 0.5 * (cap + blo);
    const double det = 1.0 - corr * corr;
    const double norm = 1.0 / (2.0 * M_PI * std::sqrt(det));
    double total = 0.0;
    for (int i = 0; i < 61; ++i) {
        const double x = mx + cx * gl.node[i];
        double row = 0.0;
        for (int j = 0; j < 61; ++j) {
            const double y = my + cy * gl.node[j];
            const double q = (x * x - 2.0 * corr * x * y + y * y) / det;
            row += gl.weight[j] * std::exp(-0.5 * q);
        }
        total += gl.weight[i] * row;
    }
    return total * cx * cy * norm;
}

} // namespace seqcurve

#endif
