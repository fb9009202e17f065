#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "seqcurve/empirical.hpp"

using namespace seqcurve;

TEST_CASE("seq_ecdf matches direct counts") {
    const std::vector<double> v{2.0, 1.0, 3.0};
    CHECK(seq_ecdf(v, 1.0, 1.5) == Catch::Approx(1.0 / 3.0));
    CHECK(seq_ecdf(v, 2.0 / 3.0, 1.5) == Catch::Approx(0.5)); // prefix {2.0, 1.0}
    CHECK(seq_ecdf(v, 1.0, std::numeric_limits<double>::infinity()) == 1.0);
    CHECK(seq_ecdf(v, 1.0, -100.0) == 0.0);
}

TEST_CASE("seq_quantile order statistics and boundary clause") {
    const std::vector<double> v{5.0, 1.0, 3.0};
    CHECK(seq_quantile(v, 1.0, 0.5) == 3.0);
    CHECK(seq_quantile(v, 1.0, 0.0) == 1.0);            // t = 0 gives the minimum
    CHECK(seq_quantile(v, 2.0 / 3.0, 1.0) == 5.0);      // max of prefix {5,1}
    CHECK_THROWS_AS(seq_quantile(v, 1.0, 1.5), std::domain_error);
    CHECK_THROWS_AS(seq_quantile(v, 1.0, -0.1), std::domain_error);
}

TEST_CASE("seq_survival and survival quantile identities") {
    const std::vector<double> v{5.0, 1.0, 3.0};
    CHECK(seq_survival(v, 1.0, 2.0) == Catch::Approx(2.0 / 3.0));
    CHECK(seq_survival_quantile(v, 1.0, 0.5) == seq_quantile(v, 1.0, 0.5));
    CHECK(seq_survival(v, 1.0, -std::numeric_limits<double>::infinity()) == 1.0);
}

TEST_CASE("empty prefixes are rejected, not clamped") {
    const std::vector<double> v{1.0, 2.0};
    CHECK_THROWS_AS(seq_ecdf(v, 0.2, 0.0), std::domain_error); // floor(0.4) = 0
    CHECK_THROWS_AS(SortedPrefix(std::vector<double>{}, 1.0), std::domain_error);
}

TEST_CASE("mixture_ecdf convex combination") {
    MarkerSample s;
    s.cases = {1.0};
    s.controls = {0.0};
    const SequentialView full{1.0, 1.0};
    CHECK(mixture_ecdf(s, full, Prevalence(0.2), 0.5) == Catch::Approx(0.8));

    MarkerSample sym;
    sym.cases = {0.5, 1.5};
    sym.controls = {0.5, 1.5};
    for (double x : {0.0, 0.7, 2.0})
        CHECK(mixture_ecdf(sym, full, Prevalence(0.5), x) ==
              Catch::Approx(seq_ecdf(sym.cases, 1.0, x)));

    MarkerSample s2;
    s2.cases = {1.0, 2.0};
    s2.controls = {0.0, 3.0};
    CHECK(mixture_ecdf(s2, full, Prevalence(0.2), 2.5) == Catch::Approx(0.6));
}

TEST_CASE("mixture_quantile generalized inverse over pooled atoms") {
    const SequentialView full{1.0, 1.0};
    MarkerSample s;
    s.cases = {1.0};
    s.controls = {0.0};
    CHECK(mixture_quantile(s, full, Prevalence(0.2), 0.5) == 0.0);
    CHECK(mixture_quantile(s, full, Prevalence(0.2), 0.9) == 1.0);

    // brute-force scan over the 4 pooled atoms: F(0)=0.4, F(1)=0.5, F(2)=0.6, F(3)=1
    MarkerSample s2;
    s2.cases = {1.0, 2.0};
    s2.controls = {0.0, 3.0};
    CHECK(mixture_quantile(s2, full, Prevalence(0.2), 0.65) == 3.0);
    CHECK(mixture_quantile(s2, full, Prevalence(0.2), 0.55) == 2.0);
    CHECK_THROWS_AS(mixture_quantile(s2, full, Prevalence(0.2), 0.0), std::domain_error);
    CHECK_THROWS_AS(mixture_quantile(s2, full, Prevalence(0.2), 1.0), std::domain_error);
}

TEST_CASE("ecdf is a nondecreasing right-continuous step function") {
    const std::vector<double> v{0.3, -1.2, 2.5, 0.3, 1.9};
    const SortedPrefix p(v, 1.0);
    double prev = -0.1;
    for (double x = -2.0; x <= 3.0; x += 0.01) {
        const double f = p.ecdf(x);
        CHECK(f >= prev);
        CHECK((f >= 0.0 && f <= 1.0));
        prev = f;
    }
    // right continuity at an atom, and the exact grid value there
    CHECK(p.ecdf(0.3) == Catch::Approx(3.0 / 5.0));
    CHECK(p.ecdf(0.3 - 1e-12) == Catch::Approx(1.0 / 5.0));
}

TEST_CASE("Galois inequality between ecdf and quantile") {
    const std::vector<double> v{0.7, -0.3, 1.4, 2.2, -1.0};
    for (double r : {0.4, 0.6, 0.8, 1.0}) {
        const SortedPrefix p(v, r);
        const auto k = static_cast<double>(p.size());
        for (int i = 1; i <= 20; ++i) {
            const double t = i / 20.0;
            CHECK(p.ecdf(p.quantile(t)) >= t - 1e-12);
            const double tk = t * k;
            if (std::fabs(tk - std::round(tk)) < 1e-9)
                CHECK(p.ecdf(p.quantile(t)) == Catch::Approx(t));
        }
    }
}

TEST_CASE("prefix consistency: view (r,.) equals truncated sample at full view") {
    const std::vector<double> v{0.5, 2.0, -1.0, 3.0, 1.0};
    for (std::size_t k = 1; k <= v.size(); ++k) {
        const double r = (static_cast<double>(k) + 0.4) / static_cast<double>(v.size());
        if (r > 1.0) break;
        const std::vector<double> trunc(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
        for (double x : {-1.5, 0.0, 1.2, 2.5}) {
            CHECK(seq_ecdf(v, r, x) == seq_ecdf(trunc, 1.0, x));
        }
        for (double t : {0.0, 0.3, 0.7, 1.0}) {
            CHECK(seq_quantile(v, r, t) == seq_quantile(trunc, 1.0, t));
        }
    }
}

TEST_CASE("brute-force oracle on all small samples and prefixes") {
    // all samples of size <= 5 with distinct values drawn from a fixed pool,
    // all k-prefixes, against exhaustive counting/sorting
    const std::vector<double> pool{-1.3, -0.4, 0.2, 0.9, 1.7};
    std::vector<int> idx{0, 1, 2, 3, 4};
    std::sort(idx.begin(), idx.end());
    do {
        for (std::size_t n = 1; n <= 5; ++n) {
            std::vector<double> sample;
            for (std::size_t i = 0; i < n; ++i) sample.push_back(pool[static_cast<std::size_t>(idx[i])]);
            for (std::size_t k = 1; k <= n; ++k) {
                const double r = static_cast<double>(k) / static_cast<double>(n);
                std::vector<double> prefix(sample.begin(),
                                           sample.begin() + static_cast<std::ptrdiff_t>(k));
                std::sort(prefix.begin(), prefix.end());
                for (double x = -1.5; x <= 1.9; x += 0.35) {
                    std::size_t count = 0;
                    for (double v : prefix)
                        if (v <= x) ++count;
                    REQUIRE(seq_ecdf(sample, r, x) ==
                            Catch::Approx(static_cast<double>(count) / static_cast<double>(k)));
                }
                for (int ti = 0; ti <= 10; ++ti) {
                    const double t = ti / 10.0;
                    const auto j = (t == 0.0)
                                       ? std::size_t{1}
                                       : static_cast<std::size_t>(
                                             std::ceil(t * static_cast<double>(k) - 1e-9));
                    REQUIRE(seq_quantile(sample, r, t) == prefix[std::max<std::size_t>(j, 1) - 1]);
                }
            }
        }
    } while (std::next_permutation(idx.begin(), idx.end()));
}

TEST_CASE("ties produce deterministic quantiles") {
    const std::vector<double> v{1.0, 1.0, 1.0, 2.0};
    CHECK(seq_quantile(v, 1.0, 0.25) == 1.0);
    CHECK(seq_quantile(v, 1.0, 0.75) == 1.0);
    CHECK(seq_quantile(v, 1.0, 1.0) == 2.0);
}

TEST_CASE("CSV ingestion preserves arrival order and validates input") {
    const std::string path = "test_sample.csv";
    {
        std::ofstream out(path);
        out << "value,label\n2.5,case\n0.1,control\n1.5,case\n-0.7,control\n";
    }
    const MarkerSample s = load_marker_csv(path);
    REQUIRE(s.cases == std::vector<double>{2.5, 1.5});
    REQUIRE(s.controls == std::vector<double>{0.1, -0.7});
    {
        std::ofstream out(path);
        out << "value,label\n2.5,patient\n";
    }
    CHECK_THROWS_WITH(load_marker_csv(path), Catch::Matchers::ContainsSubstring(":2"));
    {
        std::ofstream out(path);
        out << "value\n2.5\n";
    }
    CHECK_THROWS_AS(load_marker_csv(path), std::runtime_error);
    std::remove(path.c_str());
}
