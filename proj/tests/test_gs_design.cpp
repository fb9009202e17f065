#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "seqcurve/gs_design.hpp"

using namespace seqcurve;

namespace {
GSDesignSpec default_design(int J) {
    GSDesignSpec s; // defaults carry the rho=0.2, 0.9/0.8 vs 0.95/0.90 configuration
    s.J = J;
    return s;
}
} // namespace

TEST_CASE("Hwang-Shih-DeCani spending") {
    CHECK(hsd_spend(-4.0, 1.0, 0.025) == 0.025);
    CHECK(hsd_spend(2.0, 0.0, 0.025) == 0.0);
    const double e2 = std::exp(2.0), e4 = std::exp(4.0);
    CHECK(hsd_spend(-4.0, 0.5, 0.025) ==
          Catch::Approx(0.025 * (1.0 - e2) / (1.0 - e4)).epsilon(1e-14));
    CHECK(hsd_spend(-4.0, 0.5, 0.025) == Catch::Approx(0.002958).margin(5e-5));
    CHECK(hsd_spend(0.0, 0.4, 0.1) == Catch::Approx(0.04));
    // cumulative spend is increasing in s
    double prev = 0.0;
    for (double s = 0.1; s <= 1.0; s += 0.1) {
        const double v = hsd_spend(-3.25, s, 0.025);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("single-look boundary is the normal quantile") {
    const Boundaries b = boundaries_from_spending(default_design(1));
    REQUIRE(b.efficacy.size() == 1);
    CHECK(b.efficacy[0] == Catch::Approx(1.959964).margin(1e-5));
    CHECK(b.inflation == 1.0);
}

TEST_CASE("constant-boundary design reproduces the Pocock constant") {
    // solve for the flat boundary with total one-sided crossing 0.025 at J=2
    const std::vector<double> frac{0.5, 1.0};
    auto crossing = [&](double c) {
        const std::vector<double> u{c, c}, l{-10.0, -10.0};
        const auto probs = detail::upper_crossing_probs(frac, u, l, 0.0);
        return probs[0] + probs[1] - 0.025;
    };
    const double c = detail::brent_root(crossing, 1.5, 3.0, 1e-10);
    CHECK(c == Catch::Approx(2.178).margin(1e-3));
}

TEST_CASE("efficacy boundaries spend exactly alpha under the null") {
    for (int J : {2, 3, 4}) {
        const GSDesignSpec spec = default_design(J);
        const Boundaries b = boundaries_from_spending(spec);
        const auto probs =
            detail::upper_crossing_probs(spec.fractions(), b.efficacy, b.futility, 0.0);
        double total = 0.0;
        for (double p : probs) total += p;
        CHECK(total == Catch::Approx(spec.alpha / 2.0).margin(2e-5));
        // efficacy boundaries decrease across looks under this spending schedule
        for (std::size_t k = 1; k < b.efficacy.size(); ++k)
            CHECK(b.efficacy[k] < b.efficacy[k - 1]);
        // binding design: boundaries meet at the final look
        CHECK(b.efficacy.back() == b.futility.back());
    }
}

TEST_CASE("boundary crossing under H0 verified by direct simulation") {
    const GSDesignSpec spec = default_design(3);
    const Boundaries b = boundaries_from_spending(spec);
    const auto frac = spec.fractions();
    const std::size_t reps = 200000;
    std::size_t crossed = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        Philox rng(5150, r);
        double x = 0.0, prev_s = 0.0;
        for (std::size_t k = 0; k < frac.size(); ++k) {
            x += std::sqrt(frac[k] - prev_s) * rng.next_normal();
            prev_s = frac[k];
            const double z = x / std::sqrt(frac[k]);
            if (z >= b.efficacy[k]) {
                ++crossed;
                break;
            }
            if (z <= b.futility[k]) break;
        }
    }
    const double p = static_cast<double>(crossed) / static_cast<double>(reps);
    const double se = std::sqrt(0.025 * (1.0 - 0.025) / static_cast<double>(reps));
    CHECK(std::fabs(p - 0.025) <= 3.0 * se);
}

TEST_CASE("calibrate_binormal round trips and handles the no-information point") {
    const BinormalModel useless = calibrate_binormal(0.2, 0.6, 0.8, 0.9, 0.2);
    CHECK(useless.mu_D == 0.0);
    CHECK(useless.sigma_D == 1.0);

    const BinormalModel alt = calibrate_binormal(0.2, 0.6, 0.95, 0.9, 0.90);
    CHECK(npv_pct_true(alt, 0.2, 0.6) == Catch::Approx(0.95).margin(1e-9));
    CHECK(ppv_pct_true(alt, 0.2, 0.9) == Catch::Approx(0.90).margin(1e-9));

    const BinormalModel afp = calibrate_binormal(0.2, 0.6, 0.92, 0.9, 0.82);
    CHECK(npv_pct_true(afp, 0.2, 0.6) == Catch::Approx(0.92).margin(1e-9));
    CHECK(ppv_pct_true(afp, 0.2, 0.9) == Catch::Approx(0.82).margin(1e-9));
}

TEST_CASE("fixed sample size solves the joint power display") {
    const GSDesignSpec spec = default_design(1);
    const std::size_t n = fixed_sample_size(spec);
    CHECK(n >= 697);
    CHECK(n <= 707);
    CHECK(joint_power(spec, n) >= 0.90);
    CHECK(joint_power(spec, n - 1) < 0.90);

    // the joint requirement dominates each marginal requirement
    const BinormalModel alt = calibrate_binormal(0.2, 0.6, 0.95, 0.9, 0.90);
    const double z = norm_quantile(0.975);
    auto marginal_n = [&](bool npv) {
        std::size_t lo = 2, hi = 4096;
        auto power = [&](std::size_t m) {
            const auto mm = detail::joint_moments(spec, alt, m);
            const double a = npv ? (z - mm.mean_npv) / mm.sd_npv : (z - mm.mean_ppv) / mm.sd_ppv;
            return norm_sf(a);
        };
        while (power(hi) < spec.power) hi *= 2;
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (power(mid) >= spec.power) hi = mid;
            else lo = mid;
        }
        return hi;
    };
    CHECK(n >= marginal_n(true));
    CHECK(n >= marginal_n(false));
}

TEST_CASE("maximum sample sizes and inflation factors") {
    const std::size_t n_fixed = fixed_sample_size(default_design(1));
    CHECK(max_sample_size(default_design(1)) == n_fixed);

    const std::size_t expected[3] = {724, 737, 745};
    double prev_inflation = 1.0;
    for (int J = 2; J <= 4; ++J) {
        const std::size_t n_max = max_sample_size(default_design(J));
        const double target = static_cast<double>(expected[J - 2]);
        CHECK(std::fabs(static_cast<double>(n_max) - target) <= 0.02 * target);
        const Boundaries b = boundaries_from_spending(default_design(J));
        CHECK(b.inflation > prev_inflation); // strictly increasing in J
        prev_inflation = b.inflation;
    }
}

TEST_CASE("z_statistics consistency with its ingredients") {
    const BinormalModel m = calibrate_binormal(0.2, 0.6, 0.95, 0.9, 0.90);
    Philox rng(808, 0);
    const MarkerSample sample = simulate_sample(m, 400, 400, rng);
    const SequentialView view{1.0, 1.0};
    GSDesignSpec spec = default_design(1);
    const auto [z_npv, z_ppv] = z_statistics(sample, view, spec.rho, spec);

    const Prevalence rho(spec.rho);
    const KernelOracle oracle = kernel_density_plugin(sample, view, spec.rho);
    const double npv_hat = npv_pct(sample, view, rho, spec.u_npv);
    const PctPoint pn = oracle.at_percentile(spec.u_npv);
    const double se_npv = std::sqrt(npv_pct_var_display(spec.npv0, spec.u_npv, spec.rho, pn.f_D,
                                                        pn.f_Dbar, pn.f, 400.0, 400.0));
    CHECK(z_npv == Catch::Approx((npv_hat - spec.npv0) / se_npv).epsilon(1e-12));

    const double ppv_hat = ppv_pct(sample, view, rho, spec.u_ppv);
    const PctPoint pp = oracle.at_percentile(spec.u_ppv);
    const double se_ppv = std::sqrt(ppv_pct_var_display(spec.ppv0, spec.u_ppv, spec.rho, pp.f_D,
                                                        pp.f_Dbar, pp.f, 400.0, 400.0));
    CHECK(z_ppv == Catch::Approx((ppv_hat - spec.ppv0) / se_ppv).epsilon(1e-12));
}

TEST_CASE("z_statistics approximately standard normal under the null") {
    const BinormalModel null_model = calibrate_binormal(0.2, 0.6, 0.90, 0.9, 0.80);
    const GSDesignSpec spec = default_design(1);
    const std::size_t reps = 4000;
    std::vector<double> z_npv(reps);
    parallel_for(reps, 0, [&](std::size_t r) {
        Philox rng(4242, r);
        const MarkerSample s = simulate_sample(null_model, 702, 702, rng);
        z_npv[r] = z_statistics(s, {1.0, 1.0}, spec.rho, spec).first;
    });
    std::sort(z_npv.begin(), z_npv.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
        const double f = norm_cdf(z_npv[i]);
        ks = std::max(ks, std::fabs(f - static_cast<double>(i + 1) / reps));
        ks = std::max(ks, std::fabs(f - static_cast<double>(i) / reps));
    }
    CHECK(ks < 0.03);
}

TEST_CASE("simulate_oc basic coherence") {
    GSDesignSpec spec = default_design(2);
    const auto oc = simulate_oc(spec, spec.npv1, spec.ppv1, 400, 99);
    CHECK(oc.p_reject > 0.8);
    CHECK(oc.p_reject <= 1.0);
    CHECK(oc.expected_n_D <= static_cast<double>(max_sample_size(spec)));
    double total = 0.0;
    for (double p : oc.stop_prob) total += p;
    CHECK(total == Catch::Approx(1.0));

    // determinism across worker counts
    const auto oc1 = simulate_oc(spec, spec.npv1, spec.ppv1, 200, 7, 1);
    const auto oc4 = simulate_oc(spec, spec.npv1, spec.ppv1, 200, 7, 4);
    REQUIRE(oc1.p_reject == oc4.p_reject);
    REQUIRE(oc1.expected_n_D == oc4.expected_n_D);
}

TEST_CASE("simulated power is nondecreasing in n_D") {
    // fix the J=1 design but force three different accrual targets
    GSDesignSpec spec = default_design(1);
    double prev = -1.0;
    for (double scale : {0.6, 1.0, 1.6}) {
        GSDesignSpec s = spec;
        // shrink/grow the implied sample size via the power target route:
        // simulate at the fixed design whose n comes from a modified power
        (void)scale;
        prev = prev; // placeholder; replaced by direct loop below
        break;
    }
    // direct check: reuse simulate_oc machinery by varying the power target,
    // which moves n_max monotonically
    std::vector<double> rejects;
    for (double pw : {0.70, 0.85, 0.95}) {
        GSDesignSpec s = spec;
        s.power = pw;
        const auto oc = simulate_oc(s, s.npv1, s.ppv1, 600, 1234);
        rejects.push_back(oc.p_reject);
    }
    CHECK(rejects[0] < rejects[1]);
    CHECK(rejects[1] < rejects[2]);
}

TEST_CASE("spec validation rejects malformed designs") {
    GSDesignSpec s = default_design(1);
    s.npv0 = 0.97; // null above alternative
    CHECK_THROWS_AS(s.validate(), std::domain_error);
    GSDesignSpec s2 = default_design(2);
    s2.info_fractions = {0.5, 0.9}; // last fraction must be 1
    CHECK_THROWS_AS(s2.validate(), std::domain_error);
    GSDesignSpec s3 = default_design(0);
    CHECK_THROWS_AS(s3.validate(), std::domain_error);
}
