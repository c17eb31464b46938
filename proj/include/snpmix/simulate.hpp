#pragma once

// Synthetic case-control panels with known cluster truth. Cluster labels are
// multinomial, MAFs come from a truncated Beta (effect clusters order two
// i.i.d. draws, which realizes the half-bell prior exactly), and genotypes
// follow HWE. All draws are keyed by (seed, SNP, stream), so output is
// bit-identical for a given seed regardless of thread count.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snpmix/dataset.hpp"
#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/hyperprior.hpp"
#include "snpmix/numerics.hpp"
#include "snpmix/parallel.hpp"
#include "snpmix/rng.hpp"

namespace snpmix {

struct SimSpec {
    std::size_t n_snps = 1000;
    std::uint32_t n_cases = 100;
    std::uint32_t n_controls = 100;
    std::array<double, 3> pi = {1.0, 0.0, 0.0};  // cluster 0, +, -
    TruncatedBetaSpec maf;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_snps == 0 || n_cases == 0 || n_controls == 0)
            throw std::domain_error("SimSpec: counts must be positive");
        double sum = 0.0;
        for (double p : pi) {
            if (!(p >= 0.0)) throw std::domain_error("SimSpec: negative mixture weight");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw std::domain_error("SimSpec: mixture weights must sum to 1");
        maf.validate();
    }
};

struct SimTruth {
    std::vector<std::int8_t> label;  // 0, +1, -1
    std::vector<double> theta_case;
    std::vector<double> theta_ctrl;
};

// Inverse-CDF sampler for a Beta restricted to [lo, hi].
class TruncatedBetaSampler {
public:
    explicit TruncatedBetaSampler(const TruncatedBetaSpec& spec) : spec_(spec) {
        spec.validate();
        cdf_lo_ = reg_inc_beta(spec.lo, spec.alpha0, spec.beta0);
        cdf_hi_ = reg_inc_beta(spec.hi, spec.alpha0, spec.beta0);
        if (cdf_hi_ - cdf_lo_ < 1e-12)
            throw DataError("TruncatedBetaSampler: truncation interval carries no mass");
    }

    double draw(KeyedRng& rng) const {
        const double u = cdf_lo_ + rng.next_unit() * (cdf_hi_ - cdf_lo_);
        return inverse_reg_inc_beta(u, spec_.alpha0, spec_.beta0);
    }

private:
    TruncatedBetaSpec spec_;
    double cdf_lo_, cdf_hi_;
};

// MAF pair for one SNP. Cluster 0 shares one draw; the effect clusters order
// two independent draws.
inline std::pair<double, double> draw_maf_pair(std::int8_t cluster,
                                               const TruncatedBetaSampler& sampler,
                                               KeyedRng& rng) {
    if (cluster == 0) {
        const double theta = sampler.draw(rng);
        return {theta, theta};
    }
    const double first = sampler.draw(rng);
    double second = sampler.draw(rng);
    while (second == first) second = sampler.draw(rng);  // keep the pair strictly ordered
    const double hi = std::max(first, second);
    const double lo = std::min(first, second);
    return cluster > 0 ? std::make_pair(hi, lo) : std::make_pair(lo, hi);
}

namespace detail {

inline std::int8_t draw_genotype(const std::array<double, 3>& probs, double u) {
    if (u < probs[0]) return 0;
    if (u < probs[0] + probs[1]) return 1;
    return 2;
}

// per-SNP stream ids
inline constexpr std::uint64_t kStreamLabel = 0;
inline constexpr std::uint64_t kStreamTheta = 1;
inline constexpr std::uint64_t kStreamGenotypes = 2;

}  // namespace detail

inline std::pair<GenotypeDataset, SimTruth> simulate_dataset(const SimSpec& spec,
                                                             int threads = 0) {
    spec.validate();
    const TruncatedBetaSampler sampler(spec.maf);
    const std::size_t n_samples =
        static_cast<std::size_t>(spec.n_cases) + spec.n_controls;

    GenotypeDataset data;
    data.snp_ids.resize(spec.n_snps);
    data.sample_ids.resize(n_samples);
    data.phenotype.resize(n_samples);
    data.genotypes.resize(spec.n_snps * n_samples);
    for (std::uint32_t i = 0; i < spec.n_cases; ++i) {
        data.sample_ids[i] = "case_" + std::to_string(i + 1);
        data.phenotype[i] = 1;
    }
    for (std::uint32_t i = 0; i < spec.n_controls; ++i) {
        data.sample_ids[spec.n_cases + i] = "ctrl_" + std::to_string(i + 1);
        data.phenotype[spec.n_cases + i] = 0;
    }

    SimTruth truth;
    truth.label.resize(spec.n_snps);
    truth.theta_case.resize(spec.n_snps);
    truth.theta_ctrl.resize(spec.n_snps);

    parallel_for(spec.n_snps, threads, [&](std::size_t g) {
        data.snp_ids[g] = "snp_" + std::to_string(g + 1);

        KeyedRng label_rng(spec.seed, detail::kStreamLabel, g);
        const double u = label_rng.next_unit();
        std::int8_t label = 0;
        if (u >= spec.pi[0]) label = u < spec.pi[0] + spec.pi[1] ? 1 : -1;
        truth.label[g] = label;

        KeyedRng theta_rng(spec.seed, detail::kStreamTheta, g);
        const auto [theta_case, theta_ctrl] = draw_maf_pair(label, sampler, theta_rng);
        truth.theta_case[g] = theta_case;
        truth.theta_ctrl[g] = theta_ctrl;

        const auto probs_case = hwe_probs(theta_case);
        const auto probs_ctrl = hwe_probs(theta_ctrl);
        KeyedRng geno_rng(spec.seed, detail::kStreamGenotypes, g);
        auto row = data.snp_row(g);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const auto& probs = data.phenotype[i] ? probs_case : probs_ctrl;
            row[i] = detail::draw_genotype(probs, geno_rng.next_unit());
        }
    });
    return {std::move(data), std::move(truth)};
}

}  // namespace snpmix
