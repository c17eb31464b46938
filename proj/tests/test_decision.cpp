#include <catch2/catch.hpp>

#include <algorithm>
#include <random>

#include "snpmix/decision.hpp"

using namespace snpmix;

TEST_CASE("max-posterior assignment and tie rules", "[decision]") {
    CHECK(assign_max_posterior(Weights{0.8, 0.1, 0.1}) == Cluster::null);
    CHECK(assign_max_posterior(Weights{0.1, 0.7, 0.2}) == Cluster::plus);
    CHECK(assign_max_posterior(Weights{0.1, 0.2, 0.7}) == Cluster::minus);
    CHECK(assign_max_posterior(Weights{0.5, 0.5, 0.0}) == Cluster::null);
    CHECK(assign_max_posterior(Weights{0.2, 0.4, 0.4}) == Cluster::plus);
}

TEST_CASE("call_fdr worked examples", "[decision]") {
    {
        const std::vector<Weights> gamma = {
            {0.01, 0.99, 0.00}, {0.02, 0.00, 0.98}, {0.10, 0.90, 0.00}};
        const auto cs = call_fdr(gamma, 0.05);
        CHECK_FALSE(cs.no_calls);
        CHECK(cs.called == std::vector<std::size_t>{0, 1, 2});
        CHECK(cs.fdr_hat == Approx(0.0433333).margin(1e-6));
        CHECK(cs.tau == Approx(0.90));
        CHECK(cs.direction[0] == Cluster::plus);
        CHECK(cs.direction[1] == Cluster::minus);
        CHECK(cs.direction[2] == Cluster::plus);
    }
    {
        const std::vector<Weights> gamma = {
            {0.01, 0.99, 0.00}, {0.08, 0.00, 0.92}, {0.20, 0.80, 0.00}};
        const auto cs = call_fdr(gamma, 0.05);
        CHECK(cs.called == std::vector<std::size_t>{0, 1});
        CHECK(cs.fdr_hat == Approx(0.045).margin(1e-9));
        CHECK(cs.tau == Approx(0.92));
    }
    {
        const std::vector<Weights> gamma = {{0.20, 0.80, 0.00}};
        const auto cs = call_fdr(gamma, 0.05);
        CHECK(cs.no_calls);
        CHECK(cs.called.empty());
        CHECK(cs.fdr_hat == 0.0);
        CHECK(cs.tau == 1.0);
    }
    const std::vector<Weights> gamma = {{0.5, 0.5, 0.0}};
    CHECK_THROWS_AS(call_fdr(gamma, 0.0), std::domain_error);
    CHECK_THROWS_AS(call_fdr(gamma, 1.0), std::domain_error);
}

TEST_CASE("the longest qualifying prefix wins even after a dip", "[decision]") {
    // running means: 0.06, 0.035 -> prefix of length 1 fails, length 2 passes
    const std::vector<Weights> gamma = {{0.06, 0.94, 0.00}, {0.01, 0.00, 0.93}};
    const auto cs = call_fdr(gamma, 0.05);
    CHECK(cs.called == std::vector<std::size_t>{0, 1});
    CHECK(cs.fdr_hat == Approx(0.035).margin(1e-12));
}

namespace {

std::vector<Weights> random_gamma(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Weights> gamma(n);
    for (auto& g : gamma) {
        g = {unit(rng), unit(rng), unit(rng)};
        const double tot = g[0] + g[1] + g[2];
        for (int k = 0; k < 3; ++k) g[k] /= tot;
    }
    return gamma;
}

}  // namespace

TEST_CASE("fdr_hat never exceeds the target on non-empty call sets", "[decision]") {
    std::mt19937_64 rng(401);
    for (int rep = 0; rep < 50; ++rep) {
        const auto gamma = random_gamma(rng, 200);
        for (double target : {0.01, 0.05, 0.2, 0.5}) {
            const auto cs = call_fdr(gamma, target);
            if (!cs.no_calls) CHECK(cs.fdr_hat <= target);
            for (std::size_t i = 0; i < cs.called.size(); ++i) {
                const auto& g = gamma[cs.called[i]];
                CHECK(std::max(g[1], g[2]) >= cs.tau);
            }
        }
    }
}

TEST_CASE("call sets grow with the target", "[decision]") {
    std::mt19937_64 rng(409);
    for (int rep = 0; rep < 20; ++rep) {
        const auto gamma = random_gamma(rng, 150);
        const auto tight = call_fdr(gamma, 0.05);
        const auto loose = call_fdr(gamma, 0.2);
        CHECK(std::includes(loose.called.begin(), loose.called.end(),
                            tight.called.begin(), tight.called.end()));
    }
}

TEST_CASE("permuting input order changes indices only", "[decision]") {
    std::mt19937_64 rng(419);
    const auto gamma = random_gamma(rng, 80);
    const auto base = call_fdr(gamma, 0.1);

    std::vector<std::size_t> perm(gamma.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Weights> shuffled(gamma.size());
    for (std::size_t i = 0; i < gamma.size(); ++i) shuffled[perm[i]] = gamma[i];
    const auto permuted = call_fdr(shuffled, 0.1);

    CHECK(permuted.called.size() == base.called.size());
    CHECK(permuted.fdr_hat == Approx(base.fdr_hat).margin(1e-12));
    CHECK(permuted.tau == Approx(base.tau).margin(1e-12));
    // the called sets map onto each other through the permutation
    std::vector<std::size_t> mapped;
    for (auto g : base.called) mapped.push_back(perm[g]);
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == permuted.called);
}

TEST_CASE("confident calls agree with max-posterior labels", "[decision]") {
    std::mt19937_64 rng(421);
    for (int rep = 0; rep < 20; ++rep) {
        const auto gamma = random_gamma(rng, 100);
        const auto cs = call_fdr(gamma, 0.3);
        for (auto g : cs.called) {
            if (std::max(gamma[g][1], gamma[g][2]) > 0.5)
                CHECK(assign_max_posterior(gamma[g]) != Cluster::null);
        }
    }
}
