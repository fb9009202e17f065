#ifndef SEQCURVE_MONTECARLO_HPP
#define SEQCURVE_MONTECARLO_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "asymptotics.hpp"
#include "curves.hpp"
#include "gaussian_limits.hpp"
#include "rng.hpp"
#include "threading.hpp"

namespace seqcurve {

struct SimScenario {
    BinormalModel model;
    double rho = 0.2;
    std::size_t n_D = 200;
    std::size_t n_Dbar = 200;
    std::vector<CovProbe> probes;
    std::size_t replications = 10000;
    std::uint64_t seed = 1;
};

struct SimReport {
    std::vector<double> mean;                    // per probe
    std::vector<std::vector<double>> coverage;   // per probe x {5,25,50,75,95}%
    Matrix observed_cov;
    Matrix theoretical_cov;
    Matrix mc_se;                                // Gaussian-approx SE of each observed entry
};

inline MarkerSample simulate_sample(const BinormalModel& model, std::size_t n_D,
                                    std::size_t n_Dbar, Philox& rng) {
    if (n_D == 0 || n_Dbar == 0)
        throw std::domain_error("simulate_sample: arm sizes must be positive");
    MarkerSample s;
    s.cases.resize(n_D);
    s.controls.resize(n_Dbar);
    for (auto& v : s.cases) v = model.mu_D + model.sigma_D * rng.next_normal();
    for (auto& v : s.controls) v = rng.next_normal();
    return s;
}

enum class ScaledProcess { Roc, PpvFpf, PpvPct };

namespace detail {

// Aggregate per-replicate probe values into the Table-1 style report.  Sums are
// pairwise over the replicate-indexed storage, so the result is independent of
// how many workers produced the values.
inline SimReport aggregate(const std::vector<double>& vals, std::size_t reps, std::size_t m,
                           const Matrix& theo) {
    SimReport rep;
    rep.theoretical_cov = theo;
    rep.mean.resize(m);
    std::vector<double> col(reps);
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t r = 0; r < reps; ++r) col[r] = vals[r * m + p];
        rep.mean[p] = pairwise_sum(col) / static_cast<double>(reps);
    }
    rep.observed_cov = Matrix(m);
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = p; q < m; ++q) {
            for (std::size_t r = 0; r < reps; ++r)
                col[r] = (vals[r * m + p] - rep.mean[p]) * (vals[r * m + q] - rep.mean[q]);
            const double c = pairwise_sum(col) / static_cast<double>(reps - 1);
            rep.observed_cov(p, q) = c;
            rep.observed_cov(q, p) = c;
        }
    }
    rep.mc_se = Matrix(m);
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = 0; q < m; ++q)
            rep.mc_se(p, q) = std::sqrt((rep.observed_cov(p, p) * rep.observed_cov(q, q) +
                                         rep.observed_cov(p, q) * rep.observed_cov(p, q)) /
                                        static_cast<double>(reps));
    // normal-percentile coverage against the *theoretical* variance, as in Table 1
    static const double pct[5] = {0.05, 0.25, 0.50, 0.75, 0.95};
    rep.coverage.assign(m, std::vector<double>(5, 0.0));
    for (std::size_t p = 0; p < m; ++p) {
        const double sd = std::sqrt(theo(p, p));
        for (int c = 0; c < 5; ++c) {
            const double cut = norm_quantile(pct[c]) * sd;
            std::size_t count = 0;
            for (std::size_t r = 0; r < reps; ++r)
                if (vals[r * m + p] < cut) ++count;
            rep.coverage[p][c] = static_cast<double>(count) / static_cast<double>(reps);
        }
    }
    return rep;
}

} // namespace detail

// Generic engine behind run_table1 / run_ppv_validation: simulate, evaluate the
// scaled process at each probe, aggregate against the matching closed form.
inline SimReport run_scaled_process(const SimScenario& scenario, ScaledProcess kind,
                                    unsigned threads = 0) {
    if (scenario.replications < 2) throw std::domain_error("need at least 2 replications");
    check_probes(scenario.probes);
    const std::size_t m = scenario.probes.size();
    const std::size_t reps = scenario.replications;
    const BinormalOracle oracle(scenario.model, scenario.rho);
    const StudyShape shape(scenario.n_D, scenario.n_Dbar);
    const double sqrt_nd = std::sqrt(static_cast<double>(scenario.n_D));

    // true curve values at each probe, and the matching process-scale closed form
    std::vector<double> truth(m);
    Matrix theo;
    if (kind == ScaledProcess::Roc) {
        for (std::size_t i = 0; i < m; ++i) truth[i] = oracle.roc(scenario.probes[i].index);
        theo = roc_process_cov(oracle, scenario.probes, shape.lambda());
    } else if (kind == ScaledProcess::PpvFpf) {
        for (std::size_t i = 0; i < m; ++i)
            truth[i] = ppv_fpf(oracle.roc(scenario.probes[i].index), scenario.probes[i].index,
                               scenario.rho);
        theo = ppv_fpf_cov(oracle, scenario.rho, scenario.probes, shape);
    } else {
        for (std::size_t i = 0; i < m; ++i)
            truth[i] = ppv_pct_true(scenario.model, scenario.rho, scenario.probes[i].index);
        theo = ppv_pct_cov(oracle, scenario.rho, scenario.probes, shape);
    }
    if (kind != ScaledProcess::Roc) {
        // estimator scale -> process scale: multiply by (n_D r_i)(n_D r_j)/n_D
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                theo(i, j) *= static_cast<double>(scenario.n_D) * scenario.probes[i].r_D *
                              scenario.probes[j].r_D;
    }

    std::vector<double> vals(reps * m);
    const Prevalence rho(scenario.rho);
    parallel_for(reps, threads, [&](std::size_t r) {
        Philox rng(scenario.seed, r);
        const MarkerSample sample =
            simulate_sample(scenario.model, scenario.n_D, scenario.n_Dbar, rng);
        for (std::size_t p = 0; p < m; ++p) {
            const auto& probe = scenario.probes[p];
            const SequentialView view{probe.r_D, probe.r_Dbar};
            double est;
            if (kind == ScaledProcess::Roc) {
                est = roc_empirical(sample, view, probe.index);
            } else if (kind == ScaledProcess::PpvFpf) {
                est = ppv_fpf(roc_empirical(sample, view, probe.index), probe.index, scenario.rho);
            } else {
                est = ppv_pct(sample, view, rho, probe.index);
            }
            // scaled process: [n_D r_D] (est - truth) / sqrt(n_D), literal floor
            const double k = std::floor(probe.r_D * static_cast<double>(scenario.n_D) + 1e-9);
            vals[r * m + p] = k * (est - truth[p]) / sqrt_nd;
        }
    });
    return detail::aggregate(vals, reps, m, theo);
}

inline SimReport run_table1(const SimScenario& scenario, unsigned threads = 0) {
    return run_scaled_process(scenario, ScaledProcess::Roc, threads);
}

inline SimReport run_ppv_validation(const SimScenario& scenario, IndexKind index_kind,
                                    unsigned threads = 0) {
    if (index_kind == IndexKind::TPF)
        throw std::domain_error("run_ppv_validation: TPF indexing not supported");
    return run_scaled_process(scenario,
                              index_kind == IndexKind::FPF ? ScaledProcess::PpvFpf
                                                           : ScaledProcess::PpvPct,
                              threads);
}

} // namespace seqcurve

#endif
