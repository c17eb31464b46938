#pragma once

// Moment-matched Beta approximations of the MAF distribution, from either a
// truncated Beta reference or the empirical MAF spectrum of the panel.

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/numerics.hpp"

namespace snpmix {

struct TruncatedBetaSpec {
    double alpha0 = 2.0;
    double beta0 = 5.0;
    double lo = 0.05;
    double hi = 0.5;

    void validate() const {
        if (!(alpha0 > 0.0) || !(beta0 > 0.0))
            throw std::domain_error("TruncatedBetaSpec: shape parameters must be positive");
        if (!(lo >= 0.0) || !(lo < hi) || !(hi <= 1.0))
            throw std::domain_error("TruncatedBetaSpec: need 0 <= lo < hi <= 1");
    }
};

struct BetaMoments {
    double mean;
    double variance;
};

// First two moments of Beta(alpha0, beta0) conditioned on (lo, hi). Raw
// moments come from incomplete-beta mass ratios:
//   E[theta^r | trunc] = c_r * (I_hi(a0+r, b0) - I_lo(a0+r, b0)) / Z
// with Z the truncation mass and c_r the untruncated Gamma-ratio factor.
inline BetaMoments truncated_beta_moments(const TruncatedBetaSpec& spec) {
    spec.validate();
    const double a0 = spec.alpha0, b0 = spec.beta0;
    const double z = reg_inc_beta(spec.hi, a0, b0) - reg_inc_beta(spec.lo, a0, b0);
    if (z < 1e-12)
        throw DataError("truncated_beta_moments: truncation interval carries no mass");
    const double z1 = reg_inc_beta(spec.hi, a0 + 1.0, b0) - reg_inc_beta(spec.lo, a0 + 1.0, b0);
    const double z2 = reg_inc_beta(spec.hi, a0 + 2.0, b0) - reg_inc_beta(spec.lo, a0 + 2.0, b0);
    const double c1 = a0 / (a0 + b0);
    const double c2 = a0 * (a0 + 1.0) / ((a0 + b0) * (a0 + b0 + 1.0));
    const double mean = c1 * z1 / z;
    const double variance = c2 * z2 / z - mean * mean;
    return {mean, variance};
}

// Invert the Beta mean/variance map.
inline std::pair<double, double> moment_match(double mean, double variance) {
    if (!(mean > 0.0) || !(mean < 1.0))
        throw std::domain_error("moment_match: mean must lie in (0, 1)");
    if (!(variance > 0.0) || variance >= mean * (1.0 - mean))
        throw std::domain_error("moment_match: no Beta distribution has these moments");
    const double kappa = mean * (1.0 - mean) / variance - 1.0;
    return {mean * kappa, (1.0 - mean) * kappa};
}

inline std::pair<double, double> moment_match(const BetaMoments& m) {
    return moment_match(m.mean, m.variance);
}

// Per-SNP pooled MAF estimates; SNPs with no observed genotypes are skipped.
inline std::vector<double> pooled_mafs(std::span<const SnpSuffStats> stats) {
    std::vector<double> mafs;
    mafs.reserve(stats.size());
    for (const auto& s : stats) {
        const double n_obs = static_cast<double>(s.nobs_case) + s.nobs_ctrl;
        if (n_obs == 0.0) continue;
        mafs.push_back((static_cast<double>(s.m_case) + s.m_ctrl) / (2.0 * n_obs));
    }
    return mafs;
}

inline std::pair<double, double> empirical_hyper(std::span<const SnpSuffStats> stats) {
    const auto mafs = pooled_mafs(stats);
    if (mafs.size() < 2)
        throw DataError("empirical_hyper: need at least two SNPs with observed genotypes");
    double mean = 0.0;
    for (double p : mafs) mean += p;
    mean /= static_cast<double>(mafs.size());
    double ss = 0.0;
    for (double p : mafs) ss += (p - mean) * (p - mean);
    const double variance = ss / static_cast<double>(mafs.size() - 1);
    if (!(variance > 1e-20) || !(mean > 0.0) || !(mean < 1.0) ||
        variance >= mean * (1.0 - mean))
        throw DataError(
            "empirical_hyper: MAF spectrum too degenerate for moment matching; "
            "use the truncated Beta(2,5) default instead");
    return moment_match(mean, variance);
}

inline std::pair<double, double> empirical_hyper(const GenotypeDataset& data) {
    return empirical_hyper(suff_stats_of(data));
}

}  // namespace snpmix
