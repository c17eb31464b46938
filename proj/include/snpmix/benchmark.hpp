#pragma once

// Method orchestration and the simulation benchmark harness: run the mixture
// and SNP-wise analyses on identical replicates, score calls against truth,
// and aggregate per-method summaries.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snpmix/dataset.hpp"
#include "snpmix/decision.hpp"
#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/hyperprior.hpp"
#include "snpmix/io.hpp"
#include "snpmix/mixture_em.hpp"
#include "snpmix/simulate.hpp"
#include "snpmix/snpwise.hpp"

namespace snpmix {

// ---------------------------------------------------------------------------
// Metrics.

struct Metrics {
    double fdr = 0.0;
    double sensitivity = 0.0;
    double direction_accuracy = 1.0;  // among true positives
    std::size_t n_called = 0;
    bool no_calls = true;
};

// Realized FDR and sensitivity of a call set against simulation truth. A true
// positive does not require direction agreement; direction accuracy is
// reported separately.
inline Metrics evaluate_metrics(std::span<const std::uint8_t> called,
                                std::span<const std::int8_t> truth_label,
                                std::span<const std::int8_t> call_direction = {}) {
    if (truth_label.empty()) throw std::domain_error("evaluate_metrics: empty truth");
    if (called.size() != truth_label.size())
        throw std::domain_error("evaluate_metrics: calls and truth disagree in length");
    std::size_t n_effective = 0, n_called = 0, n_true_pos = 0, n_dir_match = 0;
    for (std::size_t g = 0; g < truth_label.size(); ++g) {
        const bool effective = truth_label[g] != 0;
        n_effective += effective;
        if (!called[g]) continue;
        ++n_called;
        if (effective) {
            ++n_true_pos;
            if (!call_direction.empty() && call_direction[g] == truth_label[g])
                ++n_dir_match;
        }
    }
    if (n_effective == 0)
        throw std::domain_error("evaluate_metrics: no effective SNPs in truth");
    Metrics m;
    m.n_called = n_called;
    m.no_calls = n_called == 0;
    m.fdr = n_called ? static_cast<double>(n_called - n_true_pos) / n_called : 0.0;
    m.sensitivity = static_cast<double>(n_true_pos) / n_effective;
    m.direction_accuracy =
        n_true_pos && !call_direction.empty()
            ? static_cast<double>(n_dir_match) / static_cast<double>(n_true_pos)
            : 1.0;
    return m;
}

// ---------------------------------------------------------------------------
// Analysis methods.

enum class Method {
    mixture_beta25,
    mixture_empirical,
    snpwise_trend,
    snpwise_logistic,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::mixture_beta25: return "mixture-beta25";
        case Method::mixture_empirical: return "mixture-empirical";
        case Method::snpwise_trend: return "snpwise-trend";
        case Method::snpwise_logistic: return "snpwise-logistic";
    }
    return "?";
}

inline Method parse_method(const std::string& name) {
    for (Method m : {Method::mixture_beta25, Method::mixture_empirical,
                     Method::snpwise_trend, Method::snpwise_logistic})
        if (name == method_name(m)) return m;
    throw std::domain_error("unknown method '" + name + "'");
}

enum class PriorKind { truncated_beta, empirical };

// How to obtain (alpha, beta) for the MAF prior. For the truncated reference
// a negative lo means "use the smallest pooled MAF observed in the data",
// falling back to 0.05 when nothing is observed.
struct PriorSpec {
    PriorKind kind = PriorKind::truncated_beta;
    double alpha0 = 2.0;
    double beta0 = 5.0;
    double lo = -1.0;
    double hi = 0.5;
};

inline std::pair<double, double> resolve_hyper(std::span<const SnpSuffStats> stats,
                                               const PriorSpec& prior) {
    if (prior.kind == PriorKind::empirical) return empirical_hyper(stats);
    TruncatedBetaSpec spec;
    spec.alpha0 = prior.alpha0;
    spec.beta0 = prior.beta0;
    spec.hi = prior.hi;
    if (prior.lo >= 0.0) {
        spec.lo = prior.lo;
    } else {
        double min_maf = 0.05;
        bool seen = false;
        for (double p : pooled_mafs(stats)) {
            min_maf = seen ? std::min(min_maf, p) : p;
            seen = true;
        }
        spec.lo = seen ? std::clamp(min_maf, 0.0, 0.49) : 0.05;
    }
    return moment_match(truncated_beta_moments(spec));
}

struct FitOptions {
    PriorSpec prior;
    Weights pseudo = {3.0, 3.0, 3.0};
    double fdr_level = 0.05;
    double tol = 1e-8;
    int max_iter = 1000;
    int threads = 0;
    QuadratureConfig quadrature;
};

struct MixtureAnalysis {
    Hyperparams hyper;
    Weights init_pi;
    MixtureFit fit;
    CallSet calls;
};

// The full mixture pipeline on an ingested panel: sufficient statistics,
// hyper-parameter resolution, trend-test initialization, cached marginals,
// EM, posterior-FDR calling.
inline MixtureAnalysis analyze_mixture(const GenotypeDataset& data, const FitOptions& opts) {
    const auto stats = suff_stats_of(data);
    MixtureAnalysis out;
    const auto [alpha, beta] = resolve_hyper(stats, opts.prior);
    out.hyper.alpha = alpha;
    out.hyper.beta = beta;
    out.hyper.pseudo = opts.pseudo;
    out.hyper.validate();

    const auto trend = snpwise_pipeline(data, SnpwiseTest::trend, opts.fdr_level, opts.threads);
    std::vector<double> maf_case(stats.size()), maf_ctrl(stats.size());
    for (std::size_t g = 0; g < stats.size(); ++g) {
        maf_case[g] = condition_maf(stats[g].m_case, stats[g].nobs_case);
        maf_ctrl[g] = condition_maf(stats[g].m_ctrl, stats[g].nobs_ctrl);
    }
    out.init_pi = init_memberships(trend.p_raw, maf_case, maf_ctrl, opts.pseudo);

    const auto marginals =
        compute_log_marginals(stats, out.hyper, opts.quadrature, opts.threads);
    EmConfig em;
    em.tol = opts.tol;
    em.max_iter = opts.max_iter;
    em.pseudo = opts.pseudo;
    em.threads = opts.threads;
    out.fit = fit_em(marginals, out.init_pi, em);
    out.calls = call_fdr(out.fit.responsibilities, opts.fdr_level);
    return out;
}

// Called flags + directions for any method, on one dataset.
struct MethodCalls {
    std::vector<std::uint8_t> called;
    std::vector<std::int8_t> direction;
};

inline MethodCalls run_method(const GenotypeDataset& data, Method method,
                              const FitOptions& opts,
                              const std::optional<std::string>& persist_path = {}) {
    MethodCalls mc;
    const std::size_t n = data.snp_count();
    mc.called.assign(n, 0);
    mc.direction.assign(n, 0);
    switch (method) {
        case Method::snpwise_trend:
        case Method::snpwise_logistic: {
            const auto res = snpwise_pipeline(
                data,
                method == Method::snpwise_trend ? SnpwiseTest::trend : SnpwiseTest::logistic,
                opts.fdr_level, opts.threads);
            mc.called = res.called;
            for (std::size_t g = 0; g < n; ++g)
                if (res.called[g]) mc.direction[g] = res.direction[g] >= 0 ? 1 : -1;
            if (persist_path) write_snpwise_results(res, data.snp_ids, *persist_path);
            break;
        }
        case Method::mixture_beta25:
        case Method::mixture_empirical: {
            FitOptions fo = opts;
            fo.prior.kind = method == Method::mixture_empirical ? PriorKind::empirical
                                                                : PriorKind::truncated_beta;
            const auto analysis = analyze_mixture(data, fo);
            for (std::size_t i = 0; i < analysis.calls.called.size(); ++i) {
                const std::size_t g = analysis.calls.called[i];
                mc.called[g] = 1;
                mc.direction[g] = analysis.calls.direction[i] == Cluster::plus ? 1 : -1;
            }
            if (persist_path)
                write_results(analysis.fit, analysis.calls, data.snp_ids, *persist_path);
            break;
        }
    }
    return mc;
}

// ---------------------------------------------------------------------------
// Benchmark harness.

struct ReplicateRecord {
    int replicate = 0;
    std::uint64_t seed = 0;
    Method method = Method::snpwise_trend;
    Metrics metrics;
};

struct MethodAggregate {
    Method method = Method::snpwise_trend;
    double fdr_median = 0.0, fdr_q1 = 0.0, fdr_q3 = 0.0;
    double abs_fdr_err_median = 0.0;
    double sensitivity_median = 0.0, sensitivity_q1 = 0.0, sensitivity_q3 = 0.0;
};

struct PairedComparison {
    Method method = Method::mixture_beta25;  // compared against snpwise-trend
    double sens_diff_median = 0.0;
    int n_sens_positive = 0;   // strictly better sensitivity
    int n_sens_ge = 0;         // at least as good
    int n_fdr_err_le = 0;      // |fdr - level| no worse than baseline
    int n_replicates = 0;
};

struct BenchmarkSummary {
    double level = 0.05;
    int replicates = 0;
    bool zero_effective = false;
    std::vector<ReplicateRecord> records;
    std::vector<MethodAggregate> aggregates;
    std::vector<PairedComparison> paired;
};

namespace detail {

// Type-7 quantile (linear interpolation), matching common statistics tools.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace detail

// Run `replicates` simulations (seed + r) and analyze each with every
// requested method. When persist_dir is given, per-replicate call files named
// rep<r>_<method>.tsv plus the truth are written there.
inline BenchmarkSummary run_benchmark(const SimSpec& spec, int replicates,
                                      std::span<const Method> methods, double level,
                                      const FitOptions& base_opts,
                                      const std::optional<std::string>& persist_dir = {}) {
    if (replicates < 1) throw std::domain_error("run_benchmark: replicates must be >= 1");
    if (methods.empty()) throw std::domain_error("run_benchmark: no methods requested");
    if (persist_dir) std::filesystem::create_directories(*persist_dir);

    BenchmarkSummary summary;
    summary.level = level;
    summary.replicates = replicates;

    FitOptions opts = base_opts;
    opts.fdr_level = level;

    for (int r = 0; r < replicates; ++r) {
        SimSpec rep_spec = spec;
        rep_spec.seed = spec.seed + static_cast<std::uint64_t>(r);
        GenotypeDataset data;
        SimTruth truth;
        try {
            auto sim = simulate_dataset(rep_spec, opts.threads);
            data = std::move(sim.first);
            truth = std::move(sim.second);
        } catch (const std::exception& e) {
            throw NumericalError("benchmark replicate with seed " +
                                 std::to_string(rep_spec.seed) + " failed: " + e.what());
        }
        std::size_t n_effective = 0;
        for (auto l : truth.label) n_effective += l != 0;
        if (n_effective == 0) summary.zero_effective = true;
        if (persist_dir)
            write_truth(truth, data.snp_ids,
                        *persist_dir + "/rep" + std::to_string(r) + "_truth.tsv");

        for (Method method : methods) {
            std::optional<std::string> persist_path;
            if (persist_dir)
                persist_path = *persist_dir + "/rep" + std::to_string(r) + "_" +
                               method_name(method) + ".tsv";
            MethodCalls mc;
            try {
                mc = run_method(data, method, opts, persist_path);
            } catch (const std::exception& e) {
                throw NumericalError("benchmark replicate with seed " +
                                     std::to_string(rep_spec.seed) + ", method " +
                                     method_name(method) + " failed: " + e.what());
            }
            ReplicateRecord rec;
            rec.replicate = r;
            rec.seed = rep_spec.seed;
            rec.method = method;
            if (n_effective > 0) {
                rec.metrics = evaluate_metrics(mc.called, truth.label, mc.direction);
            } else {
                rec.metrics.n_called = 0;
                for (auto c : mc.called)
                    if (c) ++rec.metrics.n_called;
                std::size_t false_calls = rec.metrics.n_called;
                rec.metrics.fdr = rec.metrics.n_called
                                      ? static_cast<double>(false_calls) / rec.metrics.n_called
                                      : 0.0;
                rec.metrics.sensitivity = 0.0;
                rec.metrics.no_calls = rec.metrics.n_called == 0;
            }
            summary.records.push_back(rec);
        }
    }

    // per-method aggregates
    for (Method method : methods) {
        std::vector<double> fdrs, senss, abs_errs;
        for (const auto& rec : summary.records) {
            if (rec.method != method) continue;
            fdrs.push_back(rec.metrics.fdr);
            senss.push_back(rec.metrics.sensitivity);
            abs_errs.push_back(std::fabs(rec.metrics.fdr - level));
        }
        MethodAggregate agg;
        agg.method = method;
        agg.fdr_median = detail::median(fdrs);
        agg.fdr_q1 = detail::quantile(fdrs, 0.25);
        agg.fdr_q3 = detail::quantile(fdrs, 0.75);
        agg.abs_fdr_err_median = detail::median(abs_errs);
        agg.sensitivity_median = detail::median(senss);
        agg.sensitivity_q1 = detail::quantile(senss, 0.25);
        agg.sensitivity_q3 = detail::quantile(senss, 0.75);
        summary.aggregates.push_back(agg);
    }

    // paired comparisons against the trend baseline
    const bool have_baseline =
        std::find(methods.begin(), methods.end(), Method::snpwise_trend) != methods.end();
    if (have_baseline) {
        auto metric_of = [&](Method m, int r) -> const Metrics* {
            for (const auto& rec : summary.records)
                if (rec.method == m && rec.replicate == r) return &rec.metrics;
            return nullptr;
        };
        for (Method method : methods) {
            if (method == Method::snpwise_trend) continue;
            PairedComparison pc;
            pc.method = method;
            std::vector<double> diffs;
            for (int r = 0; r < replicates; ++r) {
                const Metrics* mine = metric_of(method, r);
                const Metrics* base = metric_of(Method::snpwise_trend, r);
                if (!mine || !base) continue;
                ++pc.n_replicates;
                const double diff = mine->sensitivity - base->sensitivity;
                diffs.push_back(diff);
                pc.n_sens_positive += diff > 0.0;
                pc.n_sens_ge += diff >= 0.0;
                pc.n_fdr_err_le +=
                    std::fabs(mine->fdr - level) <= std::fabs(base->fdr - level);
            }
            pc.sens_diff_median = detail::median(diffs);
            summary.paired.push_back(pc);
        }
    }
    return summary;
}

// Tidy long-format summary: one row per (section, replicate, method, metric).
inline void write_benchmark_summary(const BenchmarkSummary& s, const std::string& path) {
    auto out = detail::open_output(path);
    out << "section\treplicate\tmethod\tmetric\tvalue\n";
    auto row = [&](const std::string& section, const std::string& replicate,
                   const std::string& method, const std::string& metric, double value) {
        out << section << '\t' << replicate << '\t' << method << '\t' << metric << '\t'
            << detail::format_double("%.6g", value) << '\n';
    };
    row("config", "-", "-", "level", s.level);
    row("config", "-", "-", "replicates", s.replicates);
    row("config", "-", "-", "zero_effective", s.zero_effective ? 1.0 : 0.0);
    for (const auto& rec : s.records) {
        const std::string r = std::to_string(rec.replicate);
        const std::string m = method_name(rec.method);
        row("replicate", r, m, "fdr", rec.metrics.fdr);
        row("replicate", r, m, "sensitivity", rec.metrics.sensitivity);
        row("replicate", r, m, "n_called", static_cast<double>(rec.metrics.n_called));
        row("replicate", r, m, "direction_accuracy", rec.metrics.direction_accuracy);
        row("replicate", r, m, "no_calls", rec.metrics.no_calls ? 1.0 : 0.0);
    }
    for (const auto& agg : s.aggregates) {
        const std::string m = method_name(agg.method);
        row("aggregate", "-", m, "fdr_median", agg.fdr_median);
        row("aggregate", "-", m, "fdr_q1", agg.fdr_q1);
        row("aggregate", "-", m, "fdr_q3", agg.fdr_q3);
        row("aggregate", "-", m, "abs_fdr_err_median", agg.abs_fdr_err_median);
        row("aggregate", "-", m, "sensitivity_median", agg.sensitivity_median);
        row("aggregate", "-", m, "sensitivity_q1", agg.sensitivity_q1);
        row("aggregate", "-", m, "sensitivity_q3", agg.sensitivity_q3);
    }
    for (const auto& pc : s.paired) {
        const std::string m = method_name(pc.method);
        row("paired_vs_trend", "-", m, "sens_diff_median", pc.sens_diff_median);
        row("paired_vs_trend", "-", m, "n_sens_positive", pc.n_sens_positive);
        row("paired_vs_trend", "-", m, "n_sens_ge", pc.n_sens_ge);
        row("paired_vs_trend", "-", m, "n_fdr_err_le", pc.n_fdr_err_le);
        row("paired_vs_trend", "-", m, "n_replicates", pc.n_replicates);
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace snpmix
