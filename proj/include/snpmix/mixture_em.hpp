#pragma once

// EM fit of the mixture weights with a Dirichlet MAP prior. The per-SNP log
// marginals are fixed inputs, so each iteration is a cheap reweighting pass.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/numerics.hpp"
#include "snpmix/parallel.hpp"

namespace snpmix {

using Weights = std::array<double, 3>;  // pi_0, pi_+, pi_-

struct EmConfig {
    double tol = 1e-8;       // relative change of the MAP objective
    int max_iter = 1000;
    Weights pseudo = {3.0, 3.0, 3.0};
    int threads = 0;         // 0 = hardware concurrency

    void validate() const {
        if (!(tol > 0.0) || !(tol < 1.0))
            throw std::domain_error("EmConfig: tol must lie in (0, 1)");
        if (max_iter < 1)
            throw std::domain_error("EmConfig: max_iter must be positive");
        for (double b : pseudo)
            if (!(b >= 1.0))
                throw std::domain_error("EmConfig: pseudo counts must be >= 1");
    }
};

struct MixtureFit {
    Weights pi = {1.0, 0.0, 0.0};
    std::vector<Weights> responsibilities;   // one row per SNP
    std::vector<LogMarginals> log_marginals; // cached inputs
    std::vector<double> log_posterior_trace;
    int iterations = 0;
    bool converged = false;
};

// Posterior cluster probabilities of one SNP (Bayes rule in log space).
// Components with zero prior weight get exactly zero.
inline Weights responsibilities(const LogMarginals& lm, const Weights& pi) {
    const std::array<double, 3> xi = {lm.log_xi0, lm.log_xi_plus, lm.log_xi_minus};
    std::array<double, 3> lw;
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        lw[k] = pi[k] > 0.0 ? std::log(pi[k]) + xi[k]
                            : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, lw[k]);
    }
    if (mx == -std::numeric_limits<double>::infinity())
        throw NumericalError("responsibilities: no cluster has positive weight");
    double denom = 0.0;
    for (int k = 0; k < 3; ++k) denom += std::exp(lw[k] - mx);
    Weights out;
    for (int k = 0; k < 3; ++k) out[k] = std::exp(lw[k] - mx) / denom;
    return out;
}

// Dirichlet-MAP update of the mixture weights.
inline Weights m_step_map(const Weights& resp_sums, const Weights& pseudo, std::size_t n_snps) {
    double denom = static_cast<double>(n_snps) - 3.0;
    for (double b : pseudo) denom += b;
    Weights out;
    for (int k = 0; k < 3; ++k) out[k] = (resp_sums[k] + pseudo[k] - 1.0) / denom;
    return out;
}

// Hard initial memberships from SNP-wise raw p-values: p < 0.05 plus a MAF
// difference sends a SNP to the matching effect cluster, everything else
// (ties included) starts in the null cluster.
inline Weights init_memberships(std::span<const double> raw_pvalues,
                                std::span<const double> maf_case,
                                std::span<const double> maf_ctrl,
                                const Weights& pseudo = {3.0, 3.0, 3.0}) {
    const std::size_t n = raw_pvalues.size();
    if (maf_case.size() != n || maf_ctrl.size() != n)
        throw std::domain_error("init_memberships: input arrays differ in length");
    if (n == 0) throw std::domain_error("init_memberships: empty input");
    Weights counts = {0.0, 0.0, 0.0};
    for (std::size_t g = 0; g < n; ++g) {
        if (raw_pvalues[g] < 0.05 && maf_case[g] > maf_ctrl[g])
            counts[1] += 1.0;
        else if (raw_pvalues[g] < 0.05 && maf_case[g] < maf_ctrl[g])
            counts[2] += 1.0;
        else
            counts[0] += 1.0;
    }
    return m_step_map(counts, pseudo, n);
}

namespace detail {

inline double map_objective_prior(const Weights& pi, const Weights& pseudo) {
    double obj = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (pseudo[k] > 1.0)
            obj += (pseudo[k] - 1.0) * std::log(pi[k]);
        // pseudo == 1 contributes 0 even at pi == 0
    }
    return obj;
}

}  // namespace detail

inline MixtureFit fit_em(std::span<const LogMarginals> log_marginals, const Weights& init_pi,
                         const EmConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = log_marginals.size();
    if (n == 0) throw std::domain_error("fit_em: empty panel");
    for (double p : init_pi)
        if (!(p > 0.0)) throw std::domain_error("fit_em: initial weights must be positive");

    MixtureFit fit;
    fit.pi = init_pi;
    fit.log_marginals.assign(log_marginals.begin(), log_marginals.end());
    fit.responsibilities.resize(n);
    std::vector<double> log_lik(n);

    double prev_obj = 0.0;
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        const Weights pi = fit.pi;
        std::array<double, 3> log_pi;
        for (int k = 0; k < 3; ++k)
            log_pi[k] = pi[k] > 0.0 ? std::log(pi[k])
                                    : -std::numeric_limits<double>::infinity();
        parallel_for(n, cfg.threads, [&](std::size_t g) {
            const auto& lm = fit.log_marginals[g];
            const std::array<double, 3> lw = {log_pi[0] + lm.log_xi0,
                                              log_pi[1] + lm.log_xi_plus,
                                              log_pi[2] + lm.log_xi_minus};
            const double lse = log_sum_exp(lw);
            log_lik[g] = lse;
            Weights& r = fit.responsibilities[g];
            for (int k = 0; k < 3; ++k)
                r[k] = std::isfinite(lw[k]) ? std::exp(lw[k] - lse) : 0.0;
        });

        // fixed-order reduction keeps results identical across thread counts
        double obj = detail::map_objective_prior(pi, cfg.pseudo);
        Weights resp_sums = {0.0, 0.0, 0.0};
        for (std::size_t g = 0; g < n; ++g) {
            obj += log_lik[g];
            for (int k = 0; k < 3; ++k) resp_sums[k] += fit.responsibilities[g][k];
        }
        if (!std::isfinite(obj)) {
            std::size_t bad = n;
            for (std::size_t g = 0; g < n; ++g)
                if (!std::isfinite(log_lik[g])) {
                    bad = g;
                    break;
                }
            throw NumericalError("fit_em: non-finite objective at SNP index " +
                                 std::to_string(bad));
        }
        fit.log_posterior_trace.push_back(obj);
        fit.iterations = iter;
        if (iter > 1 && std::fabs(obj - prev_obj) / (std::fabs(obj) + 1.0) < cfg.tol) {
            fit.converged = true;
            break;
        }
        if (iter == cfg.max_iter) break;  // keep pi consistent with the last E-step
        prev_obj = obj;
        fit.pi = m_step_map(resp_sums, cfg.pseudo, n);
    }
    return fit;
}

}  // namespace snpmix
