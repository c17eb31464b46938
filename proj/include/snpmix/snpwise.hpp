#pragma once

// The traditional SNP-wise baseline: per-SNP association tests followed by
// Benjamini-Hochberg adjustment.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "snpmix/dataset.hpp"
#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/numerics.hpp"
#include "snpmix/parallel.hpp"

namespace snpmix {

enum class SnpwiseTest { trend, logistic };

struct ContingencyTable23 {
    std::array<std::uint32_t, 3> cases = {0, 0, 0};     // genotype 0/1/2 counts
    std::array<std::uint32_t, 3> controls = {0, 0, 0};
};

inline ContingencyTable23 tabulate_genotypes(std::span<const std::int8_t> genotypes,
                                             std::span<const std::uint8_t> phenotype) {
    ContingencyTable23 t;
    for (std::size_t i = 0; i < genotypes.size(); ++i) {
        const std::int8_t v = genotypes[i];
        if (v < 0) continue;
        if (phenotype[i])
            ++t.cases[v];
        else
            ++t.controls[v];
    }
    return t;
}

struct TestResult {
    double stat = 0.0;  // z for the trend test, beta1 for logistic
    double p = 1.0;
};

// Cochran-Armitage trend test with weights (0, 1, 2); score-test variance,
// no continuity correction.
inline TestResult cochran_armitage(const ContingencyTable23& t) {
    const double r0 = t.cases[0], r1 = t.cases[1], r2 = t.cases[2];
    const double s0 = t.controls[0], s1 = t.controls[1], s2 = t.controls[2];
    const double cases = r0 + r1 + r2;
    const double total = cases + s0 + s1 + s2;
    if (cases == 0.0 || cases == total)
        throw std::domain_error("cochran_armitage: need both cases and controls");
    const std::array<double, 3> n = {r0 + s0, r1 + s1, r2 + s2};
    const double frac = cases / total;
    double u = 0.0, sw = 0.0, sw2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double w = i;
        u += w * ((i == 1 ? r1 : i == 2 ? r2 : r0) - n[i] * frac);
        sw += w * n[i];
        sw2 += w * w * n[i];
    }
    const double var = frac * (1.0 - frac) * (sw2 - sw * sw / total);
    if (!(var > 0.0))
        throw std::domain_error("cochran_armitage: zero variance (monomorphic SNP)");
    TestResult res;
    res.stat = u / std::sqrt(var);
    res.p = normal_two_sided_p(res.stat);
    return res;
}

// Divergence guard for the logistic slope; beyond this the cells are treated
// as separated.
inline constexpr double kLogisticSeparationBound = 15.0;

class SeparationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Logistic regression of case status on genotype. The genotype takes only
// the values 0/1/2, so Newton iterations run on the three grouped cells and
// the per-SNP cost is independent of sample size.
inline TestResult logistic_wald(const ContingencyTable23& t) {
    std::array<double, 3> n, r;
    double cases = 0.0, total = 0.0;
    for (int i = 0; i < 3; ++i) {
        n[i] = static_cast<double>(t.cases[i]) + t.controls[i];
        r[i] = t.cases[i];
        cases += r[i];
        total += n[i];
    }
    if (cases == 0.0 || cases == total)
        throw std::domain_error("logistic_wald: need both cases and controls");
    int informative = 0;
    for (int i = 0; i < 3; ++i) informative += n[i] > 0.0;
    if (informative < 2)
        throw std::domain_error("logistic_wald: monomorphic SNP");

    double b0 = std::log(cases / (total - cases));
    double b1 = 0.0;
    double i00 = 0.0, i01 = 0.0, i11 = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        double g0 = 0.0, g1 = 0.0;
        i00 = i01 = i11 = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (n[i] == 0.0) continue;
            const double eta = b0 + b1 * i;
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            const double w = n[i] * mu * (1.0 - mu);
            g0 += r[i] - n[i] * mu;
            g1 += i * (r[i] - n[i] * mu);
            i00 += w;
            i01 += w * i;
            i11 += w * i * i;
        }
        if (std::fabs(b1) > kLogisticSeparationBound)
            throw SeparationError("logistic_wald: complete or quasi separation");
        if (std::sqrt(g0 * g0 + g1 * g1) < 1e-8) break;
        const double det = i00 * i11 - i01 * i01;
        if (!(det > 1e-12))
            throw SeparationError("logistic_wald: singular information matrix");
        b0 += (i11 * g0 - i01 * g1) / det;
        b1 += (i00 * g1 - i01 * g0) / det;
    }
    if (std::fabs(b1) > kLogisticSeparationBound)
        throw SeparationError("logistic_wald: complete or quasi separation");
    const double det = i00 * i11 - i01 * i01;
    const double se1 = std::sqrt(i00 / det);
    TestResult res;
    res.stat = b1;
    res.p = normal_two_sided_p(b1 / se1);
    return res;
}

// Benjamini-Hochberg step-up adjustment, input order preserved.
inline std::vector<double> bh_adjust(std::span<const double> pvalues) {
    if (pvalues.empty()) throw std::domain_error("bh_adjust: empty input");
    for (double p : pvalues)
        if (!(p >= 0.0) || !(p <= 1.0))
            throw std::domain_error("bh_adjust: p-values must lie in [0, 1]");
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        const double value = pvalues[order[i]] * static_cast<double>(m) /
                             static_cast<double>(i + 1);
        running = std::min(running, value);
        adjusted[order[i]] = running;
    }
    return adjusted;
}

struct SnpwiseResult {
    std::vector<double> p_raw;
    std::vector<double> p_adjusted;
    std::vector<std::uint8_t> called;
    std::vector<std::int8_t> direction;  // +1 / -1 / 0 (undetermined)
    std::vector<std::uint8_t> flagged;   // monomorphic or separated, never called
};

inline SnpwiseResult snpwise_pipeline(const GenotypeDataset& data, SnpwiseTest test,
                                      double level, int threads = 0) {
    const std::size_t n = data.snp_count();
    if (n == 0) throw DataError("snpwise_pipeline: empty panel");
    SnpwiseResult res;
    res.p_raw.assign(n, 1.0);
    res.called.assign(n, 0);
    res.direction.assign(n, 0);
    res.flagged.assign(n, 0);
    parallel_for(n, threads, [&](std::size_t g) {
        const auto t = tabulate_genotypes(data.snp_row(g), data.phenotype);
        try {
            const auto tr = test == SnpwiseTest::trend ? cochran_armitage(t)
                                                       : logistic_wald(t);
            res.p_raw[g] = tr.p;
        } catch (const std::domain_error&) {
            res.flagged[g] = 1;
            res.p_raw[g] = 1.0;
        }
        const double maf_case =
            condition_maf(t.cases[1] + 2 * t.cases[2], t.cases[0] + t.cases[1] + t.cases[2]);
        const double maf_ctrl = condition_maf(t.controls[1] + 2 * t.controls[2],
                                              t.controls[0] + t.controls[1] + t.controls[2]);
        if (maf_case > maf_ctrl)
            res.direction[g] = 1;
        else if (maf_case < maf_ctrl)
            res.direction[g] = -1;
    });
    res.p_adjusted = bh_adjust(res.p_raw);
    for (std::size_t g = 0; g < n; ++g)
        res.called[g] = !res.flagged[g] && res.p_adjusted[g] <= level;
    return res;
}

}  // namespace snpmix
