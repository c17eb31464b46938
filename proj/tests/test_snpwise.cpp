#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "snpmix/simulate.hpp"
#include "snpmix/snpwise.hpp"

using namespace snpmix;

TEST_CASE("trend test is null on identical distributions", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {25, 50, 25};
    t.controls = {25, 50, 25};
    const auto res = cochran_armitage(t);
    CHECK(res.stat == Approx(0.0).margin(1e-12));
    CHECK(res.p == Approx(1.0).margin(1e-12));
}

TEST_CASE("trend test closed-form statistic", "[snpwise]") {
    // U = 5, Var = 5 -> z = sqrt(5)
    ContingencyTable23 t;
    t.cases = {10, 5, 5};
    t.controls = {15, 5, 0};
    const auto res = cochran_armitage(t);
    CHECK(res.stat == Approx(std::sqrt(5.0)).margin(1e-12));
    CHECK(res.p == Approx(normal_two_sided_p(std::sqrt(5.0))).margin(1e-12));
}

TEST_CASE("trend test errors on monomorphic tables", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {40, 0, 0};
    t.controls = {40, 0, 0};
    CHECK_THROWS_AS(cochran_armitage(t), std::domain_error);
}

TEST_CASE("trend asymptotic p agrees with the permutation null", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {10, 5, 5};
    t.controls = {15, 5, 0};
    const auto res = cochran_armitage(t);
    const double p_perm = oracles::permutation_trend_p(t, 200000, 777);
    CHECK(std::fabs(res.p - p_perm) < 0.01);
}

TEST_CASE("trend z is antisymmetric under label swap", "[snpwise]") {
    std::mt19937_64 rng(501);
    std::uniform_int_distribution<std::uint32_t> count(0, 40);
    for (int rep = 0; rep < 50; ++rep) {
        ContingencyTable23 t;
        t.cases = {count(rng) + 1, count(rng), count(rng)};
        t.controls = {count(rng) + 1, count(rng), count(rng)};
        ContingencyTable23 swapped;
        swapped.cases = t.controls;
        swapped.controls = t.cases;
        try {
            const auto a = cochran_armitage(t);
            const auto b = cochran_armitage(swapped);
            CHECK(a.stat == Approx(-b.stat).margin(1e-10));
            CHECK(a.p == Approx(b.p).margin(1e-12));
        } catch (const std::domain_error&) {
            // monomorphic draw, nothing to compare
        }
    }
}

TEST_CASE("scaling counts up sharpens the trend p-value", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {20, 15, 5};
    t.controls = {25, 12, 3};
    double prev_p = 1.1;
    for (std::uint32_t c : {1u, 2u, 4u, 8u}) {
        ContingencyTable23 scaled;
        for (int i = 0; i < 3; ++i) {
            scaled.cases[i] = t.cases[i] * c;
            scaled.controls[i] = t.controls[i] * c;
        }
        const auto res = cochran_armitage(scaled);
        CHECK(res.p < prev_p);
        prev_p = res.p;
    }
}

TEST_CASE("logistic slope is null on identical distributions", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {30, 40, 30};
    t.controls = {30, 40, 30};
    const auto res = logistic_wald(t);
    CHECK(res.stat == Approx(0.0).margin(1e-6));
    CHECK(res.p >= 0.999);
}

TEST_CASE("logistic slope matches the grid-polish oracle", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {10, 5, 5};
    t.controls = {15, 5, 0};
    const auto res = logistic_wald(t);
    const double b1 = oracles::logistic_slope_grid_polish(t);
    CHECK(res.stat == Approx(b1).margin(1e-4));
    // frozen dev-time values from the independent maximization
    CHECK(res.stat == Approx(1.14057).margin(1e-4));
    CHECK(res.p == Approx(0.036347).margin(1e-4));
}

TEST_CASE("complete separation raises", "[snpwise]") {
    ContingencyTable23 t;
    t.cases = {0, 0, 40};
    t.controls = {40, 0, 0};
    CHECK_THROWS_AS(logistic_wald(t), SeparationError);
}

TEST_CASE("bh_adjust worked examples", "[snpwise]") {
    {
        const std::vector<double> p = {0.01, 0.02, 0.03};
        const auto adj = bh_adjust(p);
        CHECK(adj[0] == Approx(0.03).margin(1e-12));
        CHECK(adj[1] == Approx(0.03).margin(1e-12));
        CHECK(adj[2] == Approx(0.03).margin(1e-12));
    }
    {
        const std::vector<double> p = {0.005, 0.1, 0.9};
        const auto adj = bh_adjust(p);
        CHECK(adj[0] == Approx(0.015).margin(1e-12));
        CHECK(adj[1] == Approx(0.15).margin(1e-12));
        CHECK(adj[2] == Approx(0.9).margin(1e-12));
    }
    {
        const std::vector<double> p = {0.2, 0.2, 0.2, 0.2};
        const auto adj = bh_adjust(p);
        for (double a : adj) CHECK(a == Approx(0.2).margin(1e-12));
    }
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{}), std::domain_error);
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{1.5}), std::domain_error);
}

TEST_CASE("bh_adjust monotonicity", "[snpwise]") {
    std::mt19937_64 rng(521);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> p(80);
    for (auto& x : p) x = unit(rng);
    const auto adj = bh_adjust(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(adj[i] >= p[i]);
        for (std::size_t j = 0; j < p.size(); ++j)
            if (p[i] <= p[j]) CHECK(adj[i] <= adj[j] + 1e-12);
    }
    // thresholding the adjusted values reproduces the step-up decision rule
    for (double level : {0.05, 0.2, 0.5}) {
        std::vector<std::size_t> order(p.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
        std::size_t cutoff = 0;  // largest i with p_(i) <= level * i / m
        for (std::size_t i = 0; i < order.size(); ++i)
            if (p[order[i]] <= level * static_cast<double>(i + 1) / p.size())
                cutoff = i + 1;
        for (std::size_t i = 0; i < order.size(); ++i)
            CHECK((adj[order[i]] <= level) == (i < cutoff));
    }
}

TEST_CASE("pipeline calls nothing on null panels and flags degenerate SNPs", "[snpwise]") {
    GenotypeDataset data;
    data.snp_ids = {"s1", "s2", "s3"};
    data.sample_ids = {"a", "b", "c", "d"};
    data.phenotype = {1, 1, 0, 0};
    data.genotypes = {
        1, 2, 1, 2,  // identical case/control distribution
        0, 1, 0, 1,  // identical again
        0, 0, 0, 0,  // monomorphic -> flagged
    };
    const auto res = snpwise_pipeline(data, SnpwiseTest::trend, 0.05);
    CHECK(res.flagged == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(res.p_raw[2] == 1.0);
    for (auto c : res.called) CHECK(c == 0);
}

TEST_CASE("single strong SNP is called at level 0.05", "[snpwise]") {
    GenotypeDataset data;
    data.snp_ids = {"s1"};
    const int n_side = 40;
    for (int i = 0; i < 2 * n_side; ++i) {
        data.sample_ids.push_back("x" + std::to_string(i));
        data.phenotype.push_back(i < n_side);
    }
    // cases enriched for the minor allele
    for (int i = 0; i < n_side; ++i) data.genotypes.push_back(i < 25 ? 1 : 0);
    for (int i = 0; i < n_side; ++i) data.genotypes.push_back(i < 5 ? 1 : 0);
    const auto res = snpwise_pipeline(data, SnpwiseTest::trend, 0.05);
    REQUIRE(res.p_raw[0] < 0.05);
    CHECK(res.called[0] == 1);
    CHECK(res.direction[0] == 1);  // minor allele up in cases


    const auto logi = snpwise_pipeline(data, SnpwiseTest::logistic, 0.05);
    CHECK(logi.called[0] == 1);
}

TEST_CASE("logistic slope sign tracks the MAF difference", "[snpwise]") {
    SimSpec spec;
    spec.n_snps = 60;
    spec.n_cases = 60;
    spec.n_controls = 60;
    spec.pi = {0.4, 0.3, 0.3};
    spec.seed = 5100;
    const auto [data, truth] = simulate_dataset(spec);
    for (std::size_t g = 0; g < data.snp_count(); ++g) {
        const auto t = tabulate_genotypes(data.snp_row(g), data.phenotype);
        TestResult res;
        try {
            res = logistic_wald(t);
        } catch (const std::domain_error&) {
            continue;
        }
        const double maf_case = condition_maf(t.cases[1] + 2 * t.cases[2],
                                              t.cases[0] + t.cases[1] + t.cases[2]);
        const double maf_ctrl =
            condition_maf(t.controls[1] + 2 * t.controls[2],
                          t.controls[0] + t.controls[1] + t.controls[2]);
        if (std::fabs(res.stat) < 1e-8) continue;
        if (maf_case > maf_ctrl) CHECK(res.stat > 0.0);
        if (maf_case < maf_ctrl) CHECK(res.stat < 0.0);
    }
}
