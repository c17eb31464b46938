#pragma once

// Per-SNP marginal likelihoods for the three-cluster model.
//
// Under HWE a SNP's genotypes in one condition reduce to the sufficient
// statistics (m, n1, n_obs): the likelihood of the observed genotypes given
// MAF theta is 2^n1 * theta^m * (1-theta)^(2*n_obs - m). With Beta(alpha,
// beta) priors on the MAFs this integrates in closed form:
//
//   null cluster  (shared theta):    2^n1 * B(alpha + m, beta + 2n - m) / B(alpha, beta)
//   signed clusters (ordered pair):  2^n1 * 2 * B(a_x, b_x) B(a_y, b_y) / B(alpha, beta)^2
//                                      * Pr(U > V)   [or Pr(U < V)]
//
// where a_d = alpha + m_d, b_d = beta + 2 n_d - m_d and U ~ Beta(a_x, b_x),
// V ~ Beta(a_y, b_y) are the case/control MAF posteriors under independent
// priors. The exceedance probability is the only part without a closed form.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "snpmix/dataset.hpp"
#include "snpmix/error.hpp"
#include "snpmix/numerics.hpp"
#include "snpmix/parallel.hpp"

namespace snpmix {

enum class Sign { plus, minus };

// Minor-allele count, heterozygote count and observed-subject count for one
// condition.
struct ConditionCounts {
    std::uint32_t m = 0;
    std::uint32_t n1 = 0;
    std::uint32_t n_obs = 0;
};

struct SnpSuffStats {
    std::uint32_t m_case = 0;
    std::uint32_t n1_case = 0;
    std::uint32_t nobs_case = 0;
    std::uint32_t m_ctrl = 0;
    std::uint32_t n1_ctrl = 0;
    std::uint32_t nobs_ctrl = 0;
};

inline void validate_suff_stats(const SnpSuffStats& s) {
    auto check = [](std::uint32_t m, std::uint32_t n1, std::uint32_t n_obs) {
        if (m > 2 * n_obs || n1 > n_obs || m < n1 || (m - n1) % 2 != 0)
            throw std::invalid_argument("SnpSuffStats: inconsistent counts");
    };
    check(s.m_case, s.n1_case, s.nobs_case);
    check(s.m_ctrl, s.n1_ctrl, s.nobs_ctrl);
}

// Beta prior on MAFs plus Dirichlet pseudo counts on the mixture weights.
struct Hyperparams {
    double alpha = 1.0;
    double beta = 1.0;
    std::array<double, 3> pseudo = {3.0, 3.0, 3.0};  // b_0, b_+, b_-

    void validate() const {
        if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            throw std::domain_error("Hyperparams: alpha and beta must be positive and finite");
        for (double b : pseudo)
            if (!(b >= 1.0) || !std::isfinite(b))
                throw std::domain_error("Hyperparams: pseudo counts must be >= 1");
    }
};

struct LogMarginals {
    double log_xi0 = 0.0;
    double log_xi_plus = 0.0;
    double log_xi_minus = 0.0;
};

// HWE genotype probabilities ((1-theta)^2, 2 theta (1-theta), theta^2).
inline std::array<double, 3> hwe_probs(double theta) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw std::domain_error("hwe_probs: theta must lie in (0, 1)");
    const double q = 1.0 - theta;
    return {q * q, 2.0 * theta * q, theta * theta};
}

inline ConditionCounts suff_stats(std::span<const std::int8_t> genotypes) {
    ConditionCounts c;
    for (std::int8_t s : genotypes) {
        if (s < 0) continue;  // missing
        c.m += static_cast<std::uint32_t>(s);
        c.n1 += (s == 1);
        ++c.n_obs;
    }
    return c;
}

inline std::vector<SnpSuffStats> suff_stats_of(const GenotypeDataset& data) {
    const std::size_t n = data.sample_count();
    std::vector<SnpSuffStats> out(data.snp_count());
    for (std::size_t g = 0; g < data.snp_count(); ++g) {
        auto row = data.snp_row(g);
        SnpSuffStats& s = out[g];
        for (std::size_t i = 0; i < n; ++i) {
            const std::int8_t v = row[i];
            if (v < 0) continue;
            if (data.phenotype[i]) {
                s.m_case += static_cast<std::uint32_t>(v);
                s.n1_case += (v == 1);
                ++s.nobs_case;
            } else {
                s.m_ctrl += static_cast<std::uint32_t>(v);
                s.n1_ctrl += (v == 1);
                ++s.nobs_ctrl;
            }
        }
    }
    return out;
}

// Complete-case MAF estimate for one condition (0 when nothing observed).
inline double condition_maf(std::uint32_t m, std::uint32_t n_obs) {
    return n_obs ? static_cast<double>(m) / (2.0 * n_obs) : 0.0;
}

inline double log_xi_null(const SnpSuffStats& s, const Hyperparams& h) {
    validate_suff_stats(s);
    h.validate();
    const double m = static_cast<double>(s.m_case) + s.m_ctrl;
    const double two_n = 2.0 * (static_cast<double>(s.nobs_case) + s.nobs_ctrl);
    return (static_cast<double>(s.n1_case) + s.n1_ctrl) * std::numbers::ln2 +
           log_beta(h.alpha + m, h.beta + two_n - m) - log_beta(h.alpha, h.beta);
}

namespace detail {

struct PosteriorShapes {
    double a_case, b_case, a_ctrl, b_ctrl;
    double log_base;   // n1 * ln 2
    double log_common; // ln 2 + ln B(a_x,b_x) + ln B(a_y,b_y) - 2 ln B(alpha,beta)
};

inline PosteriorShapes posterior_shapes(const SnpSuffStats& s, const Hyperparams& h) {
    PosteriorShapes ps{};
    ps.a_case = h.alpha + s.m_case;
    ps.b_case = h.beta + 2.0 * s.nobs_case - s.m_case;
    ps.a_ctrl = h.alpha + s.m_ctrl;
    ps.b_ctrl = h.beta + 2.0 * s.nobs_ctrl - s.m_ctrl;
    ps.log_base = (static_cast<double>(s.n1_case) + s.n1_ctrl) * std::numbers::ln2;
    // grouping keeps the value bitwise symmetric under a case/control swap
    const double sum_log_b = log_beta(ps.a_case, ps.b_case) + log_beta(ps.a_ctrl, ps.b_ctrl);
    ps.log_common = std::numbers::ln2 + sum_log_b - 2.0 * log_beta(h.alpha, h.beta);
    return ps;
}

}  // namespace detail

inline double log_xi_signed(const SnpSuffStats& s, const Hyperparams& h, Sign sign,
                            const QuadratureConfig& cfg = {}) {
    validate_suff_stats(s);
    h.validate();
    const auto ps = detail::posterior_shapes(s, h);
    const double exceed =
        sign == Sign::plus
            ? beta_exceedance(ps.a_case, ps.b_case, ps.a_ctrl, ps.b_ctrl, cfg)
            : beta_exceedance(ps.a_ctrl, ps.b_ctrl, ps.a_case, ps.b_case, cfg);
    return ps.log_base + ps.log_common + std::log(clamp_prob(exceed));
}

// All three log marginals of one SNP. One quadrature serves both signs: the
// minus-side probability is the complement, recomputed directly only when it
// is small enough for the subtraction to cost relative accuracy.
inline LogMarginals log_marginals(const SnpSuffStats& s, const Hyperparams& h,
                                  const QuadratureConfig& cfg = {}) {
    validate_suff_stats(s);
    h.validate();
    LogMarginals lm;
    lm.log_xi0 = log_xi_null(s, h);
    const auto ps = detail::posterior_shapes(s, h);
    const double p_plus = beta_exceedance(ps.a_case, ps.b_case, ps.a_ctrl, ps.b_ctrl, cfg);
    double p_minus = 1.0 - p_plus;
    if (p_minus < 0.01)
        p_minus = beta_exceedance(ps.a_ctrl, ps.b_ctrl, ps.a_case, ps.b_case, cfg);
    lm.log_xi_plus = ps.log_base + ps.log_common + std::log(clamp_prob(p_plus));
    lm.log_xi_minus = ps.log_base + ps.log_common + std::log(clamp_prob(p_minus));
    return lm;
}

// Marginals for a whole panel; independent across SNPs, parallel map.
inline std::vector<LogMarginals> compute_log_marginals(std::span<const SnpSuffStats> stats,
                                                       const Hyperparams& h,
                                                       const QuadratureConfig& cfg = {},
                                                       int threads = 0) {
    h.validate();
    cfg.validate();
    std::vector<LogMarginals> out(stats.size());
    parallel_for(stats.size(), threads,
                 [&](std::size_t g) { out[g] = log_marginals(stats[g], h, cfg); });
    return out;
}

}  // namespace snpmix
