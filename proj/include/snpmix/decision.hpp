#pragma once

// SNP calling from responsibilities: max-posterior labels, or posterior-FDR
// control by thresholding the effect responsibility.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "snpmix/mixture_em.hpp"

namespace snpmix {

enum class Cluster : std::int8_t { null = 0, plus = 1, minus = 2 };

inline char cluster_symbol(Cluster c) {
    switch (c) {
        case Cluster::plus: return '+';
        case Cluster::minus: return '-';
        default: return '0';
    }
}

struct CallSet {
    std::vector<std::size_t> called;      // SNP indices, ascending
    std::vector<Cluster> direction;       // parallel to called, plus or minus
    double tau = 1.0;                     // effect responsibility of the last call
    double fdr_hat = 0.0;
    double target_fdr = 0.05;
    bool no_calls = true;
};

// argmax over (gamma_0, gamma_+, gamma_-); ties touching the null cluster
// stay null, a strict +/- tie goes to +.
inline Cluster assign_max_posterior(const Weights& gamma) {
    if (gamma[0] >= gamma[1] && gamma[0] >= gamma[2]) return Cluster::null;
    if (gamma[1] >= gamma[2]) return Cluster::plus;
    return Cluster::minus;
}

inline std::vector<Cluster> assign_max_posterior(std::span<const Weights> gamma) {
    std::vector<Cluster> out(gamma.size());
    for (std::size_t g = 0; g < gamma.size(); ++g) out[g] = assign_max_posterior(gamma[g]);
    return out;
}

// Largest call set whose running mean of gamma_0 stays at or below the
// target: SNPs are ranked by effect responsibility (descending, gamma_0 then
// index breaking ties) and the longest qualifying prefix is kept.
inline CallSet call_fdr(std::span<const Weights> gamma, double target) {
    if (!(target > 0.0) || !(target < 1.0))
        throw std::domain_error("call_fdr: target must lie in (0, 1)");
    const std::size_t n = gamma.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto effect = [&](std::size_t g) { return std::max(gamma[g][1], gamma[g][2]); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ea = effect(a), eb = effect(b);
        if (ea != eb) return ea > eb;
        if (gamma[a][0] != gamma[b][0]) return gamma[a][0] < gamma[b][0];
        return a < b;
    });

    CallSet cs;
    cs.target_fdr = target;
    double null_sum = 0.0;
    std::size_t best_len = 0;
    double best_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        null_sum += gamma[order[i]][0];
        const double mean = null_sum / static_cast<double>(i + 1);
        if (mean <= target) {
            best_len = i + 1;
            best_mean = mean;
        }
    }
    if (best_len == 0) return cs;

    cs.no_calls = false;
    cs.fdr_hat = best_mean;
    cs.tau = effect(order[best_len - 1]);
    cs.called.assign(order.begin(), order.begin() + best_len);
    std::sort(cs.called.begin(), cs.called.end());
    cs.direction.resize(best_len);
    for (std::size_t i = 0; i < best_len; ++i) {
        const auto& g = gamma[cs.called[i]];
        cs.direction[i] = g[1] >= g[2] ? Cluster::plus : Cluster::minus;
    }
    return cs;
}

}  // namespace snpmix
