#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "seqcurve/gaussian_limits.hpp"

using namespace seqcurve;

namespace {

struct CovSummary {
    Matrix cov;
    std::vector<double> mean;
};

template <typename DrawFn>
CovSummary empirical_cov(DrawFn&& draw, std::size_t n_draws, std::size_t dim) {
    CovSummary s;
    s.mean.assign(dim, 0.0);
    std::vector<std::vector<double>> vals(n_draws);
    for (std::size_t d = 0; d < n_draws; ++d) {
        vals[d] = draw(d);
        for (std::size_t i = 0; i < dim; ++i) s.mean[i] += vals[d][i];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n_draws);
    s.cov = Matrix(dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) {
            double acc = 0.0;
            for (const auto& v : vals) acc += (v[i] - s.mean[i]) * (v[j] - s.mean[j]);
            s.cov(i, j) = s.cov(j, i) = acc / static_cast<double>(n_draws - 1);
        }
    return s;
}

double cov_se(const Matrix& cov, std::size_t i, std::size_t j, std::size_t n) {
    return std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / static_cast<double>(n));
}

} // namespace

TEST_CASE("Kiefer sampler: empirical covariance matches the closed form") {
    GridSpec grid;
    grid.index_grid = {0.3, 0.5, 0.8};
    grid.time_grid = {0.4, 1.0};
    const std::size_t n = 20000;
    const KieferSampler sampler(grid, 99, KieferConstruction::Cholesky);
    const auto s = empirical_cov([&](std::size_t d) { return sampler.draw(d).values; }, n, 6);
    std::size_t flat = 0;
    for (double t1 : grid.index_grid)
        for (double r1 : grid.time_grid) {
            std::size_t flat2 = 0;
            for (double t2 : grid.index_grid)
                for (double r2 : grid.time_grid) {
                    const double theo = kiefer_cov(t1, r1, t2, r2);
                    CHECK(std::fabs(s.cov(flat, flat2) - theo) <=
                          3.0 * cov_se(s.cov, flat, flat2, n) + 1e-12);
                    ++flat2;
                }
            ++flat;
        }
    // (t=0.5, r=1) variance specifically: 0.25 within 3 SE
    CHECK(std::fabs(s.cov(3, 3) - 0.25) <= 3.0 * cov_se(s.cov, 3, 3, n));
    // mean within 3 SE of zero at every node
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::fabs(s.mean[i]) <= 3.0 * std::sqrt(s.cov(i, i) / static_cast<double>(n)));
}

TEST_CASE("Brownian-sheet construction: pinned bridge and matching covariance") {
    GridSpec grid;
    grid.index_grid = {1e-12, 0.5, 0.999999999999};
    grid.time_grid = {0.5, 1.0};
    const KieferSampler sheet(grid, 4, KieferConstruction::BrownianSheet);
    for (std::size_t d = 0; d < 50; ++d) {
        const auto v = sheet.draw(d).values;
        // bridge pinned at t ~ 0 and t ~ 1 (grid stores t-major, r fastest)
        CHECK(std::fabs(v[0]) < 1e-5);
        CHECK(std::fabs(v[1]) < 1e-5);
        CHECK(std::fabs(v[4]) < 1e-5);
        CHECK(std::fabs(v[5]) < 1e-5);
    }

    GridSpec grid2;
    grid2.index_grid = {0.25, 0.6};
    grid2.time_grid = {0.5, 1.0};
    const std::size_t n = 20000;
    const KieferSampler a(grid2, 21, KieferConstruction::Cholesky);
    const KieferSampler b(grid2, 22, KieferConstruction::BrownianSheet);
    const auto sa = empirical_cov([&](std::size_t d) { return a.draw(d).values; }, n, 4);
    const auto sb = empirical_cov([&](std::size_t d) { return b.draw(d).values; }, n, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double se = std::hypot(cov_se(sa.cov, i, j, n), cov_se(sb.cov, i, j, n));
            CHECK(std::fabs(sa.cov(i, j) - sb.cov(i, j)) <= 3.0 * se);
        }
}

TEST_CASE("reproducibility: identical seed and construction give identical fields") {
    GridSpec grid;
    grid.index_grid = {0.2, 0.7};
    grid.time_grid = {0.3, 1.0};
    for (auto c : {KieferConstruction::Cholesky, KieferConstruction::BrownianSheet}) {
        const KieferSampler s1(grid, 123, c);
        const KieferSampler s2(grid, 123, c);
        for (std::size_t d : {0ul, 5ul, 99ul}) {
            const auto v1 = s1.draw(d).values;
            const auto v2 = s2.draw(d).values;
            REQUIRE(v1 == v2);
        }
        // different seed changes the field
        const KieferSampler s3(grid, 124, c);
        CHECK(s1.draw(0).values != s3.draw(0).values);
    }
}

TEST_CASE("ROC limit process: variance matches the reference entries within 3 SE") {
    const BinormalOracle oracle(BinormalModel(1.0, 1.0), 0.2);
    const std::vector<CovProbe> probes{
        {0.4, 0.4, 0.7}, {0.4, 1.0, 1.0}, {0.2, 0.4, 0.7}, {0.2, 1.0, 1.0}};
    const RocLimitSampler sampler(oracle, probes, 1.0, 314);
    const std::size_t n = 20000;
    const auto s = empirical_cov([&](std::size_t d) { return sampler.draw(d).values; }, n, 4);
    const Matrix theo = roc_process_cov(oracle, probes, 1.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(std::fabs(s.cov(i, j) - theo(i, j)) <= 3.0 * cov_se(s.cov, i, j, n));
    CHECK(std::fabs(s.cov(1, 1) - 0.322) <= 3.0 * cov_se(s.cov, 1, 1, n));
    CHECK(std::fabs(s.cov(0, 2) - 0.081) <= 3.0 * cov_se(s.cov, 0, 2, n));
}

TEST_CASE("lambda -> 0 reduces the ROC limit to the case-arm Kiefer term") {
    const BinormalOracle oracle(BinormalModel(1.0, 1.0), 0.2);
    const std::vector<CovProbe> probes{{0.4, 0.5, 0.8}};
    const RocLimitSampler with(oracle, probes, 0.0, 7);
    const std::size_t n = 20000;
    const auto s = empirical_cov([&](std::size_t d) { return with.draw(d).values; }, n, 1);
    const double roc = oracle.roc(0.4);
    const double theo = roc * (1.0 - roc) * 0.5;
    CHECK(std::fabs(s.cov(0, 0) - theo) <= 3.0 * cov_se(s.cov, 0, 0, n));
}

TEST_CASE("PPV percentile limit process matches the closed form and the NPV image") {
    const double rho = 0.2;
    const BinormalOracle oracle(BinormalModel(1.0, 1.0), rho);
    const std::vector<CovProbe> probes{{0.6, 0.5, 0.7}, {0.9, 1.0, 1.0}};
    const StudyShape shape(200, 200);
    const PpvPctLimitSampler sampler(oracle, rho, probes, shape.lambda(), 2718);
    const std::size_t n = 20000;
    const auto s = empirical_cov([&](std::size_t d) { return sampler.draw_ppv(d).values; }, n, 2);
    // process-scale closed form: estimator covariance scaled by n_D r_i r_j
    Matrix theo = ppv_pct_cov(oracle, rho, probes, shape);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            theo(i, j) *= 200.0 * probes[i].r_D * probes[j].r_D;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::fabs(s.cov(i, j) - theo(i, j)) <= 3.0 * cov_se(s.cov, i, j, n));

    // the NPV draw is the exact pathwise linear image of the PPV draw
    for (std::size_t d = 0; d < 20; ++d) {
        const auto p = sampler.draw_ppv(d).values;
        const auto q = sampler.draw_npv(d).values;
        CHECK(q[0] == Catch::Approx(((1.0 - 0.6) / 0.6) * p[0]).margin(1e-15));
        CHECK(q[1] == Catch::Approx(((1.0 - 0.9) / 0.9) * p[1]).margin(1e-15));
    }

    // cross-covariance PPV(0.9)/NPV(0.6) against the closed form
    const auto cross = empirical_cov(
        [&](std::size_t d) {
            const auto p = sampler.draw_ppv(d).values;
            return std::vector<double>{p[1], ((1.0 - 0.6) / 0.6) * p[0]};
        },
        n, 2);
    const SequentialView v1{1.0, 1.0}, v2{0.5, 0.7};
    double theo_cross = ppv_npv_cross_cov(oracle, rho, 0.9, 0.6, v1, v2, shape);
    theo_cross *= 200.0 * 1.0 * 0.5; // to process scale
    CHECK(std::fabs(cross.cov(0, 1) - theo_cross) <= 3.0 * cov_se(cross.cov, 0, 1, n));
}

TEST_CASE("Cholesky jitter is applied only when needed and is reported") {
    GridSpec fine;
    fine.index_grid = {0.5};
    fine.time_grid = {0.5, 1.0};
    const KieferSampler clean(fine, 5, KieferConstruction::Cholesky);
    CHECK_FALSE(clean.jitter_applied());

    // duplicate probe points make the covariance singular: jitter must kick in
    const BinormalOracle oracle(BinormalModel(1.0, 1.0), 0.2);
    const std::vector<CovProbe> dup{{0.4, 1.0, 1.0}, {0.4, 1.0, 1.0}};
    const RocLimitSampler degenerate(oracle, dup, 1.0, 5);
    CHECK(degenerate.jitter_applied());
    const auto v = degenerate.draw(0).values;
    CHECK(std::fabs(v[0] - v[1]) < 1e-4);
}
