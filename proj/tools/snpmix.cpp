// snpmix command line: simulate panels, run QC, fit the three-cluster
// mixture, run the SNP-wise baseline, score calls against truth, and drive
// the replicate benchmark.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "snpmix/snpmix.hpp"

namespace {

std::vector<double> parse_number_list(const std::string& text, std::size_t expected,
                                      const std::string& flag) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find(',', start);
        const std::string item =
            text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected a comma-separated number list");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (expected != 0 && values.size() != expected)
        throw CLI::ValidationError(flag, "expected " + std::to_string(expected) + " numbers");
    return values;
}

snpmix::PriorSpec parse_prior(const std::string& text) {
    snpmix::PriorSpec prior;
    if (text == "empirical") {
        prior.kind = snpmix::PriorKind::empirical;
        return prior;
    }
    if (text.rfind("beta:", 0) != 0)
        throw CLI::ValidationError("--prior", "expected 'empirical' or 'beta:A,B[,L,H]'");
    const auto numbers = parse_number_list(text.substr(5), 0, "--prior");
    if (numbers.size() != 2 && numbers.size() != 4)
        throw CLI::ValidationError("--prior", "expected 'beta:A,B' or 'beta:A,B,L,H'");
    prior.kind = snpmix::PriorKind::truncated_beta;
    prior.alpha0 = numbers[0];
    prior.beta0 = numbers[1];
    if (numbers.size() == 4) {
        prior.lo = numbers[2];
        prior.hi = numbers[3];
    }
    return prior;
}

struct SimulateArgs {
    std::size_t snps = 1000;
    std::uint32_t cases = 100;
    std::uint32_t controls = 100;
    std::string pi = "1,0,0";
    double maf_alpha = 2.0;
    double maf_beta = 5.0;
    double maf_lo = 0.05;
    double maf_hi = 0.5;
    std::uint64_t seed = 1;
};

void add_simulate_flags(CLI::App* cmd, SimulateArgs& args) {
    cmd->add_option("--snps", args.snps, "number of SNPs");
    cmd->add_option("--cases", args.cases, "number of cases");
    cmd->add_option("--controls", args.controls, "number of controls");
    cmd->add_option("--pi", args.pi, "mixture weights pi0,pi+,pi-");
    cmd->add_option("--maf-alpha", args.maf_alpha, "MAF Beta shape alpha");
    cmd->add_option("--maf-beta", args.maf_beta, "MAF Beta shape beta");
    cmd->add_option("--maf-lo", args.maf_lo, "MAF truncation lower bound");
    cmd->add_option("--maf-hi", args.maf_hi, "MAF truncation upper bound");
    cmd->add_option("--seed", args.seed, "generator seed");
}

snpmix::SimSpec to_spec(const SimulateArgs& args) {
    snpmix::SimSpec spec;
    spec.n_snps = args.snps;
    spec.n_cases = args.cases;
    spec.n_controls = args.controls;
    const auto pi = parse_number_list(args.pi, 3, "--pi");
    spec.pi = {pi[0], pi[1], pi[2]};
    spec.maf.alpha0 = args.maf_alpha;
    spec.maf.beta0 = args.maf_beta;
    spec.maf.lo = args.maf_lo;
    spec.maf.hi = args.maf_hi;
    spec.seed = args.seed;
    return spec;
}

struct FitArgs {
    std::string prior = "beta:2,5";
    std::string pseudo = "3,3,3";
    double fdr = 0.05;
    double tol = 1e-8;
    int max_iter = 1000;
    int threads = 0;
};

void add_fit_flags(CLI::App* cmd, FitArgs& args) {
    cmd->add_option("--prior", args.prior,
                    "MAF prior: 'beta:A,B[,L,H]' (truncated reference, L defaults to the "
                    "smallest observed MAF, H to 0.5) or 'empirical'");
    cmd->add_option("--pseudo", args.pseudo, "Dirichlet pseudo counts b0,b+,b-");
    cmd->add_option("--fdr", args.fdr, "target posterior FDR");
    cmd->add_option("--tol", args.tol, "EM relative tolerance");
    cmd->add_option("--max-iter", args.max_iter, "EM iteration cap");
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
}

snpmix::FitOptions to_options(const FitArgs& args) {
    snpmix::FitOptions opts;
    opts.prior = parse_prior(args.prior);
    const auto pseudo = parse_number_list(args.pseudo, 3, "--pseudo");
    opts.pseudo = {pseudo[0], pseudo[1], pseudo[2]};
    opts.fdr_level = args.fdr;
    opts.tol = args.tol;
    opts.max_iter = args.max_iter;
    opts.threads = args.threads;
    return opts;
}

int run(int argc, char** argv) {
    CLI::App app{"three-cluster empirical-Bayes mixture analysis of case-control GWAS panels"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic panel with truth");
    SimulateArgs sim_args;
    std::string sim_out;
    add_simulate_flags(sim_cmd, sim_args);
    sim_cmd->add_option("--out", sim_out, "output directory")->required();

    // qc
    auto* qc_cmd = app.add_subcommand("qc", "filter a panel by call rate, MAF and HWE");
    std::string qc_genotypes, qc_phenotype, qc_out;
    snpmix::QcOptions qc_opts;
    qc_cmd->add_option("--genotypes", qc_genotypes, "genotype TSV")->required();
    qc_cmd->add_option("--phenotype", qc_phenotype, "phenotype TSV")->required();
    qc_cmd->add_option("--min-call-rate", qc_opts.min_call_rate, "minimum call rate");
    qc_cmd->add_option("--min-maf", qc_opts.min_maf, "minimum pooled MAF");
    qc_cmd->add_option("--hwe-alpha", qc_opts.hwe_alpha, "HWE rejection level (controls)");
    qc_cmd->add_option("--out", qc_out, "output directory")->required();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit the mixture and call SNPs by posterior FDR");
    std::string fit_genotypes, fit_phenotype, fit_out;
    FitArgs fit_args;
    fit_cmd->add_option("--genotypes", fit_genotypes, "genotype TSV")->required();
    fit_cmd->add_option("--phenotype", fit_phenotype, "phenotype TSV")->required();
    add_fit_flags(fit_cmd, fit_args);
    fit_cmd->add_option("--out", fit_out, "results TSV")->required();

    // snpwise
    auto* snp_cmd = app.add_subcommand("snpwise", "per-SNP tests with BH adjustment");
    std::string snp_genotypes, snp_phenotype, snp_out, snp_test = "trend";
    double snp_fdr = 0.05;
    int snp_threads = 0;
    snp_cmd->add_option("--genotypes", snp_genotypes, "genotype TSV")->required();
    snp_cmd->add_option("--phenotype", snp_phenotype, "phenotype TSV")->required();
    snp_cmd->add_option("--test", snp_test, "trend or logistic")
        ->check(CLI::IsMember({"trend", "logistic"}));
    snp_cmd->add_option("--fdr", snp_fdr, "BH level");
    snp_cmd->add_option("--threads", snp_threads, "worker threads (0 = hardware)");
    snp_cmd->add_option("--out", snp_out, "results TSV")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a call file against truth");
    std::string eval_results, eval_truth, eval_out;
    eval_cmd->add_option("--results", eval_results, "results TSV")->required();
    eval_cmd->add_option("--truth", eval_truth, "truth TSV")->required();
    eval_cmd->add_option("--out", eval_out, "metrics TSV")->required();

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "replicate simulation benchmark");
    SimulateArgs bench_sim;
    FitArgs bench_fit;
    int bench_replicates = 1;
    std::string bench_methods = "mixture-beta25,mixture-empirical,snpwise-trend";
    std::string bench_out, bench_keep;
    bench_cmd->add_option("--replicates", bench_replicates, "number of replicates")
        ->required();
    add_simulate_flags(bench_cmd, bench_sim);
    add_fit_flags(bench_cmd, bench_fit);
    bench_cmd->add_option("--methods", bench_methods, "comma-separated method list");
    bench_cmd->add_option("--out", bench_out, "summary TSV")->required();
    bench_cmd->add_option("--keep", bench_keep,
                          "directory for per-replicate call and truth files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim_cmd->parsed()) {
            const auto spec = to_spec(sim_args);
            const auto [data, truth] = snpmix::simulate_dataset(spec);
            std::filesystem::create_directories(sim_out);
            snpmix::write_dataset(data, sim_out + "/genotypes.tsv",
                                  sim_out + "/phenotypes.tsv");
            snpmix::write_truth(truth, data.snp_ids, sim_out + "/truth.tsv");
        } else if (qc_cmd->parsed()) {
            const auto data = snpmix::load_dataset(qc_genotypes, qc_phenotype);
            const auto [filtered, report] = snpmix::qc_filter(data, qc_opts);
            std::filesystem::create_directories(qc_out);
            snpmix::write_dataset(filtered, qc_out + "/genotypes.tsv",
                                  qc_out + "/phenotypes.tsv");
            snpmix::write_qc_report(report, qc_out + "/qc_report.tsv");
        } else if (fit_cmd->parsed()) {
            const auto data = snpmix::load_dataset(fit_genotypes, fit_phenotype);
            const auto opts = to_options(fit_args);
            const auto analysis = snpmix::analyze_mixture(data, opts);
            snpmix::write_results(analysis.fit, analysis.calls, data.snp_ids, fit_out);
            std::fprintf(stderr,
                         "fit: alpha=%.4g beta=%.4g pi=(%.4g, %.4g, %.4g) iterations=%d "
                         "called=%zu fdr_hat=%.4g\n",
                         analysis.hyper.alpha, analysis.hyper.beta, analysis.fit.pi[0],
                         analysis.fit.pi[1], analysis.fit.pi[2], analysis.fit.iterations,
                         analysis.calls.called.size(), analysis.calls.fdr_hat);
        } else if (snp_cmd->parsed()) {
            const auto data = snpmix::load_dataset(snp_genotypes, snp_phenotype);
            const auto res = snpmix::snpwise_pipeline(
                data,
                snp_test == "trend" ? snpmix::SnpwiseTest::trend
                                    : snpmix::SnpwiseTest::logistic,
                snp_fdr, snp_threads);
            snpmix::write_snpwise_results(res, data.snp_ids, snp_out);
        } else if (eval_cmd->parsed()) {
            const auto calls = snpmix::read_calls(eval_results);
            const auto truth = snpmix::load_truth(eval_truth);
            if (calls.snp_ids != truth.snp_ids)
                throw snpmix::DataError(
                    "evaluate: results and truth must list the same SNPs in order");
            const auto m =
                snpmix::evaluate_metrics(calls.called, truth.label, calls.direction);
            auto out = snpmix::detail::open_output(eval_out);
            std::size_t n_effective = 0;
            for (auto l : truth.label) n_effective += l != 0;
            out << "metric\tvalue\n";
            out << "fdr\t" << snpmix::detail::format_double("%.6g", m.fdr) << '\n';
            out << "sensitivity\t" << snpmix::detail::format_double("%.6g", m.sensitivity)
                << '\n';
            out << "direction_accuracy\t"
                << snpmix::detail::format_double("%.6g", m.direction_accuracy) << '\n';
            out << "n_called\t" << m.n_called << '\n';
            out << "n_effective\t" << n_effective << '\n';
            out << "no_calls\t" << (m.no_calls ? 1 : 0) << '\n';
        } else if (bench_cmd->parsed()) {
            const auto spec = to_spec(bench_sim);
            const auto opts = to_options(bench_fit);
            std::vector<snpmix::Method> methods;
            std::size_t start = 0;
            while (start <= bench_methods.size()) {
                const std::size_t pos = bench_methods.find(',', start);
                const std::string name = bench_methods.substr(
                    start, pos == std::string::npos ? std::string::npos : pos - start);
                if (!name.empty()) methods.push_back(snpmix::parse_method(name));
                if (pos == std::string::npos) break;
                start = pos + 1;
            }
            std::optional<std::string> keep;
            if (!bench_keep.empty()) keep = bench_keep;
            const auto summary = snpmix::run_benchmark(spec, bench_replicates, methods,
                                                       opts.fdr_level, opts, keep);
            snpmix::write_benchmark_summary(summary, bench_out);
        }
    } catch (const snpmix::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const snpmix::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
