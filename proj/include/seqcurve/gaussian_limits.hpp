#ifndef SEQCURVE_GAUSSIAN_LIMITS_HPP
#define SEQCURVE_GAUSSIAN_LIMITS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "asymptotics.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace seqcurve {

enum class KieferConstruction { Cholesky, BrownianSheet };

struct GridSpec {
    std::vector<double> index_grid; // t values, strictly increasing, interior
    std::vector<double> time_grid;  // r values, strictly increasing, in (0,1]

    void validate() const {
        auto check = [](const std::vector<double>& g, double lo, double hi_incl) {
            if (g.empty()) throw std::domain_error("GridSpec: empty grid");
            double prev = lo;
            for (double v : g) {
                if (!(v > prev) || !(v <= hi_incl) || v >= 1.0 + 1e-15)
                    throw std::domain_error("GridSpec: grid must be strictly increasing and interior");
                prev = v;
            }
        };
        check(index_grid, 0.0, 0.999999999999);
        check(time_grid, 0.0, 1.0);
    }
};

// One realized field on a grid (or probe list), plus how it was built.
struct LimitProcessSample {
    std::vector<double> values;
    std::uint64_t seed = 0;
    KieferConstruction construction = KieferConstruction::Cholesky;
    bool jitter_applied = false; // Cholesky diagonal jitter 1e-10 was needed
};

namespace detail {

// Cholesky factor of a covariance matrix, retrying once with 1e-10 diagonal
// jitter; whether jitter was needed is reported, never hidden.
inline Matrix chol_with_jitter(Matrix cov, bool& jitter_applied) {
    jitter_applied = false;
    try {
        return cholesky(cov);
    } catch (const std::runtime_error&) {
        for (std::size_t i = 0; i < cov.size(); ++i) cov(i, i) += 1e-10;
        jitter_applied = true;
        return cholesky(cov); // if this also fails, the error propagates
    }
}

inline std::vector<double> chol_draw(const Matrix& l, Philox& rng) {
    const std::size_t n = l.size();
    std::vector<double> z(n), out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.next_normal();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += l(i, j) * z[j];
        out[i] = s;
    }
    return out;
}

} // namespace detail

// Repeated Kiefer-field draws on index_grid x time_grid (t-major flattening).
// Draw d is a pure function of (seed, d): workers may produce draws in any order.
class KieferSampler {
public:
    KieferSampler(const GridSpec& grid, std::uint64_t seed, KieferConstruction construction)
        : grid_(grid), seed_(seed), construction_(construction) {
        grid_.validate();
        if (construction_ == KieferConstruction::Cholesky) {
            const std::size_t nt = grid_.index_grid.size();
            const std::size_t nr = grid_.time_grid.size();
            if (nt * nr > 10000)
                throw std::domain_error("KieferSampler: Cholesky path limited to 1e4 grid points");
            Matrix cov(nt * nr);
            for (std::size_t i = 0; i < nt; ++i)
                for (std::size_t j = 0; j < nr; ++j)
                    for (std::size_t k = 0; k < nt; ++k)
                        for (std::size_t l = 0; l < nr; ++l)
                            cov(i * nr + j, k * nr + l) =
                                kiefer_cov(grid_.index_grid[i], grid_.time_grid[j],
                                           grid_.index_grid[k], grid_.time_grid[l]);
            chol_ = detail::chol_with_jitter(cov, jitter_applied_);
        }
    }

    bool jitter_applied() const { return jitter_applied_; }

    LimitProcessSample draw(std::uint64_t draw_index) const {
        LimitProcessSample out;
        out.seed = seed_;
        out.construction = construction_;
        out.jitter_applied = jitter_applied_;
        Philox rng(seed_, draw_index);
        if (construction_ == KieferConstruction::Cholesky) {
            out.values = detail::chol_draw(chol_, rng);
        } else {
            out.values = sheet_draw(rng);
        }
        return out;
    }

private:
    // K(t,r) = W(t,r) - t W(1,r) from independent rectangle increments of a
    // Brownian sheet on the t-grid (augmented with t=1) x r-grid.
    std::vector<double> sheet_draw(Philox& rng) const {
        std::vector<double> tg = grid_.index_grid;
        tg.push_back(1.0);
        const auto& rg = grid_.time_grid;
        const std::size_t nt = tg.size();
        const std::size_t nr = rg.size();
        // cumulative sheet W on the augmented grid
        std::vector<double> w(nt * nr, 0.0);
        for (std::size_t j = 0; j < nr; ++j) {
            const double dr = rg[j] - (j ? rg[j - 1] : 0.0);
            for (std::size_t i = 0; i < nt; ++i) {
                const double dt = tg[i] - (i ? tg[i - 1] : 0.0);
                const double inc = std::sqrt(dt * dr) * rng.next_normal();
                double v = inc;
                if (i) v += w[(i - 1) * nr + j];
                if (j) v += w[i * nr + (j - 1)];
                if (i && j) v -= w[(i - 1) * nr + (j - 1)];
                w[i * nr + j] = v;
            }
        }
        std::vector<double> out(grid_.index_grid.size() * nr);
        for (std::size_t i = 0; i + 1 < nt; ++i)
            for (std::size_t j = 0; j < nr; ++j)
                out[i * nr + j] = w[i * nr + j] - tg[i] * w[(nt - 1) * nr + j];
        return out;
    }

    GridSpec grid_;
    std::uint64_t seed_;
    KieferConstruction construction_;
    Matrix chol_;
    bool jitter_applied_ = false;
};

inline LimitProcessSample sample_kiefer(const GridSpec& grid, std::uint64_t seed,
                                        KieferConstruction construction = KieferConstruction::Cholesky) {
    return KieferSampler(grid, seed, construction).draw(0);
}

// Repeated draws of the ROC limit process at a joint probe list:
// K1(ROC(t), r_D) + sqrt(lambda) (r_D/r_Dbar) q(t) K2(t, r_Dbar)
// with K1, K2 independent Kiefer processes.
class RocLimitSampler {
public:
    RocLimitSampler(const DensityOracle& oracle, const std::vector<CovProbe>& probes,
                    double lambda, std::uint64_t seed)
        : probes_(probes), seed_(seed) {
        check_probes(probes_);
        const std::size_t m = probes_.size();
        weight_.resize(m);
        Matrix cov1(m), cov2(m);
        std::vector<double> roc(m);
        for (std::size_t i = 0; i < m; ++i) {
            roc[i] = oracle.roc(probes_[i].index);
            weight_[i] = std::sqrt(lambda) * (probes_[i].r_D / probes_[i].r_Dbar) *
                         oracle.density_ratio(probes_[i].index);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                cov1(i, j) = kiefer_cov(roc[i], probes_[i].r_D, roc[j], probes_[j].r_D);
                cov2(i, j) = kiefer_cov(probes_[i].index, probes_[i].r_Dbar, probes_[j].index,
                                        probes_[j].r_Dbar);
            }
        chol1_ = detail::chol_with_jitter(cov1, jitter1_);
        chol2_ = detail::chol_with_jitter(cov2, jitter2_);
    }

    bool jitter_applied() const { return jitter1_ || jitter2_; }

    LimitProcessSample draw(std::uint64_t draw_index) const {
        Philox rng1(seed_, 2 * draw_index);
        Philox rng2(seed_, 2 * draw_index + 1);
        const auto k1 = detail::chol_draw(chol1_, rng1);
        const auto k2 = detail::chol_draw(chol2_, rng2);
        LimitProcessSample out;
        out.seed = seed_;
        out.jitter_applied = jitter_applied();
        out.values.resize(probes_.size());
        for (std::size_t i = 0; i < probes_.size(); ++i)
            out.values[i] = k1[i] + weight_[i] * k2[i];
        return out;
    }

private:
    std::vector<CovProbe> probes_;
    std::uint64_t seed_;
    std::vector<double> weight_;
    Matrix chol1_, chol2_;
    bool jitter1_ = false, jitter2_ = false;
};

inline LimitProcessSample sample_limit_roc(const DensityOracle& oracle,
                                           const std::vector<CovProbe>& probes, double lambda,
                                           std::uint64_t seed) {
    return RocLimitSampler(oracle, probes, lambda, seed).draw(0);
}

// Percentile-indexed PPV limit process at a joint probe list:
// -A(u) K1(g(u), r_D) + sqrt(lambda) (r_D/r_Dbar) B(u) K2(h(u), r_Dbar).
// The NPV field is the exact pathwise image ((1-u)/u) x PPV field.
class PpvPctLimitSampler {
public:
    PpvPctLimitSampler(const DensityOracle& oracle, double rho, const std::vector<CovProbe>& probes,
                       double lambda, std::uint64_t seed)
        : probes_(probes), seed_(seed) {
        check_probes(probes_);
        const std::size_t m = probes_.size();
        a_.resize(m);
        b_.resize(m);
        Matrix cov1(m), cov2(m);
        std::vector<detail::PctCoef> coef(m);
        for (std::size_t i = 0; i < m; ++i)
            coef[i] = detail::pct_coef(oracle.at_percentile(probes_[i].index), rho,
                                       probes_[i].index);
        for (std::size_t i = 0; i < m; ++i) {
            a_[i] = coef[i].A;
            b_[i] = std::sqrt(lambda) * (probes_[i].r_D / probes_[i].r_Dbar) * coef[i].B;
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                cov1(i, j) = kiefer_cov(coef[i].g, probes_[i].r_D, coef[j].g, probes_[j].r_D);
                cov2(i, j) = kiefer_cov(coef[i].h, probes_[i].r_Dbar, coef[j].h, probes_[j].r_Dbar);
            }
        chol1_ = detail::chol_with_jitter(cov1, jitter1_);
        chol2_ = detail::chol_with_jitter(cov2, jitter2_);
    }

    bool jitter_applied() const { return jitter1_ || jitter2_; }

    LimitProcessSample draw_ppv(std::uint64_t draw_index) const {
        Philox rng1(seed_, 2 * draw_index);
        Philox rng2(seed_, 2 * draw_index + 1);
        const auto k1 = detail::chol_draw(chol1_, rng1);
        const auto k2 = detail::chol_draw(chol2_, rng2);
        LimitProcessSample out;
        out.seed = seed_;
        out.jitter_applied = jitter_applied();
        out.values.resize(probes_.size());
        for (std::size_t i = 0; i < probes_.size(); ++i)
            out.values[i] = -a_[i] * k1[i] + b_[i] * k2[i];
        return out;
    }

    LimitProcessSample draw_npv(std::uint64_t draw_index) const {
        LimitProcessSample out = draw_ppv(draw_index);
        for (std::size_t i = 0; i < probes_.size(); ++i)
            out.values[i] *= (1.0 - probes_[i].index) / probes_[i].index;
        return out;
    }

private:
    std::vector<CovProbe> probes_;
    std::uint64_t seed_;
    std::vector<double> a_, b_;
    Matrix chol1_, chol2_;
    bool jitter1_ = false, jitter2_ = false;
};

inline LimitProcessSample sample_limit_ppv_pct(const DensityOracle& oracle, double rho,
                                               const std::vector<CovProbe>& probes, double lambda,
                                               std::uint64_t seed) {
    return PpvPctLimitSampler(oracle, rho, probes, lambda, seed).draw_ppv(0);
}

} // namespace seqcurve

#endif
