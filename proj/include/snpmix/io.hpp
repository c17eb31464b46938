#pragma once

// TSV ingestion, quality control and result serialization. All formats are
// UTF-8 with LF line endings and NA as the only missing token.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "snpmix/dataset.hpp"
#include "snpmix/decision.hpp"
#include "snpmix/error.hpp"
#include "snpmix/genotype_model.hpp"
#include "snpmix/mixture_em.hpp"
#include "snpmix/numerics.hpp"
#include "snpmix/simulate.hpp"
#include "snpmix/snpwise.hpp"

namespace snpmix {

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

inline double parse_probability(std::string_view text, std::size_t line_no,
                                const std::string& what) {
    try {
        return std::stod(std::string(text));
    } catch (const std::exception&) {
        throw ParseError("invalid " + what + " value '" + std::string(text) + "'", line_no);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Genotype + phenotype ingestion.

inline GenotypeDataset load_dataset(const std::string& genotype_path,
                                    const std::string& phenotype_path) {
    // phenotype first: sample_id -> status
    std::unordered_map<std::string, std::uint8_t> status;
    {
        auto in = detail::open_input(phenotype_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = detail::split_tabs(line);
            if (fields.size() != 2)
                throw ParseError("phenotype file: expected 2 columns", line_no);
            std::string id(fields[0]);
            if (fields[1] != "0" && fields[1] != "1")
                throw ParseError("phenotype file: status must be 0 or 1", line_no);
            if (!status.emplace(std::move(id), fields[1] == "1" ? 1 : 0).second)
                throw ParseError("phenotype file: duplicate sample id", line_no);
        }
    }

    GenotypeDataset data;
    auto in = detail::open_input(genotype_path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw ParseError("genotype file: missing header", 1);
    ++line_no;
    {
        const auto fields = detail::split_tabs(line);
        if (fields.empty() || fields[0] != "snp_id")
            throw ParseError("genotype file: header must start with 'snp_id'", line_no);
        for (std::size_t i = 1; i < fields.size(); ++i)
            data.sample_ids.emplace_back(fields[i]);
        if (data.sample_ids.empty())
            throw ParseError("genotype file: no samples in header", line_no);
    }
    const std::size_t n_samples = data.sample_ids.size();
    if (status.size() != n_samples)
        throw DataError("phenotype file lists " + std::to_string(status.size()) +
                        " samples but genotype header has " + std::to_string(n_samples));
    data.phenotype.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto it = status.find(data.sample_ids[i]);
        if (it == status.end())
            throw DataError("sample '" + data.sample_ids[i] + "' missing from phenotype file");
        data.phenotype[i] = it->second;
    }

    std::unordered_map<std::string, std::size_t> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != n_samples + 1)
            throw ParseError("genotype file: expected " + std::to_string(n_samples + 1) +
                                 " columns, got " + std::to_string(fields.size()),
                             line_no);
        if (!seen_ids.emplace(std::string(fields[0]), line_no).second)
            throw ParseError("genotype file: duplicate SNP id '" + std::string(fields[0]) +
                                 "'",
                             line_no);
        data.snp_ids.emplace_back(fields[0]);
        for (std::size_t i = 1; i <= n_samples; ++i) {
            const auto cell = fields[i];
            std::int8_t value;
            if (cell == "0")
                value = 0;
            else if (cell == "1")
                value = 1;
            else if (cell == "2")
                value = 2;
            else if (cell == "NA")
                value = kMissingGenotype;
            else
                throw ParseError("genotype file: illegal cell '" + std::string(cell) +
                                     "' in column " + std::to_string(i + 1),
                                 line_no);
            data.genotypes.push_back(value);
        }
    }
    data.validate();
    return data;
}

inline void write_dataset(const GenotypeDataset& data, const std::string& genotype_path,
                          const std::string& phenotype_path) {
    auto geno = detail::open_output(genotype_path);
    geno << "snp_id";
    for (const auto& id : data.sample_ids) geno << '\t' << id;
    geno << '\n';
    for (std::size_t g = 0; g < data.snp_count(); ++g) {
        geno << data.snp_ids[g];
        for (const std::int8_t v : data.snp_row(g)) {
            if (v < 0)
                geno << "\tNA";
            else
                geno << '\t' << static_cast<int>(v);
        }
        geno << '\n';
    }
    if (!geno) throw DataError("write failed: " + genotype_path);

    auto pheno = detail::open_output(phenotype_path);
    for (std::size_t i = 0; i < data.sample_count(); ++i)
        pheno << data.sample_ids[i] << '\t' << static_cast<int>(data.phenotype[i]) << '\n';
    if (!pheno) throw DataError("write failed: " + phenotype_path);
}

// ---------------------------------------------------------------------------
// Simulation truth.

struct TruthFile {
    std::vector<std::string> snp_ids;
    std::vector<std::int8_t> label;
    std::vector<double> theta_case;
    std::vector<double> theta_ctrl;
};

inline void write_truth(const SimTruth& truth, std::span<const std::string> snp_ids,
                        const std::string& path) {
    auto out = detail::open_output(path);
    out << "snp_id\tcluster\ttheta_case\ttheta_ctrl\n";
    for (std::size_t g = 0; g < snp_ids.size(); ++g) {
        const char sym = truth.label[g] > 0 ? '+' : truth.label[g] < 0 ? '-' : '0';
        out << snp_ids[g] << '\t' << sym << '\t'
            << detail::format_double("%.10g", truth.theta_case[g]) << '\t'
            << detail::format_double("%.10g", truth.theta_ctrl[g]) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

inline TruthFile load_truth(const std::string& path) {
    TruthFile t;
    auto in = detail::open_input(path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("truth file: missing header", 1);
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 4)
            throw ParseError("truth file: expected 4 columns", line_no);
        t.snp_ids.emplace_back(fields[0]);
        if (fields[1] == "+")
            t.label.push_back(1);
        else if (fields[1] == "-")
            t.label.push_back(-1);
        else if (fields[1] == "0")
            t.label.push_back(0);
        else
            throw ParseError("truth file: cluster must be one of 0, +, -", line_no);
        t.theta_case.push_back(detail::parse_probability(fields[2], line_no, "theta_case"));
        t.theta_ctrl.push_back(detail::parse_probability(fields[3], line_no, "theta_ctrl"));
    }
    return t;
}

// ---------------------------------------------------------------------------
// HWE test and QC filtering.

struct HweResult {
    double stat = 0.0;
    double p = 1.0;
};

inline HweResult hwe_chisq(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2) {
    const double n = static_cast<double>(c0) + c1 + c2;
    if (n == 0.0) throw std::domain_error("hwe_chisq: empty counts");
    const double p_hat = (static_cast<double>(c1) + 2.0 * c2) / (2.0 * n);
    if (p_hat <= 0.0 || p_hat >= 1.0) return {0.0, 1.0};  // monomorphic, trivial fit
    const auto expected = hwe_probs(p_hat);
    const std::array<double, 3> observed = {static_cast<double>(c0),
                                            static_cast<double>(c1),
                                            static_cast<double>(c2)};
    double stat = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double e = n * expected[i];
        if (e > 0.0) stat += (observed[i] - e) * (observed[i] - e) / e;
    }
    return {stat, chisq_sf(stat, 1.0)};
}

struct QcOptions {
    double min_call_rate = 0.95;
    double min_maf = 0.01;
    double hwe_alpha = 1e-6;
};

struct QcReport {
    std::size_t input_snps = 0;
    std::size_t removed_call_rate = 0;
    std::size_t removed_maf = 0;
    std::size_t removed_hwe = 0;
    std::size_t flipped = 0;   // recoded so pooled MAF <= 0.5
    std::size_t survivors = 0;
};

// Filters run in fixed order: call rate, pooled MAF (with 0<->2 recoding so
// the pooled minor allele is the rare one), HWE on controls only.
inline std::pair<GenotypeDataset, QcReport> qc_filter(const GenotypeDataset& input,
                                                      const QcOptions& opts = {}) {
    input.validate();
    QcReport report;
    report.input_snps = input.snp_count();
    GenotypeDataset out;
    out.sample_ids = input.sample_ids;
    out.phenotype = input.phenotype;
    const std::size_t n_samples = input.sample_count();

    for (std::size_t g = 0; g < input.snp_count(); ++g) {
        auto row = input.snp_row(g);
        std::size_t n_obs = 0;
        std::uint32_t allele_sum = 0;
        for (const std::int8_t v : row) {
            if (v < 0) continue;
            ++n_obs;
            allele_sum += static_cast<std::uint32_t>(v);
        }
        const double call_rate = static_cast<double>(n_obs) / static_cast<double>(n_samples);
        if (call_rate < opts.min_call_rate) {
            ++report.removed_call_rate;
            continue;
        }
        double maf = n_obs ? static_cast<double>(allele_sum) / (2.0 * n_obs) : 0.0;
        const bool flip = maf > 0.5;
        if (flip) maf = 1.0 - maf;
        if (maf < opts.min_maf) {
            ++report.removed_maf;
            continue;
        }
        std::array<std::uint32_t, 3> ctrl_counts = {0, 0, 0};
        for (std::size_t i = 0; i < n_samples; ++i) {
            const std::int8_t v = row[i];
            if (v < 0 || input.phenotype[i]) continue;
            ++ctrl_counts[flip ? 2 - v : v];
        }
        if (ctrl_counts[0] + ctrl_counts[1] + ctrl_counts[2] > 0) {
            const auto hwe = hwe_chisq(ctrl_counts[0], ctrl_counts[1], ctrl_counts[2]);
            if (hwe.p < opts.hwe_alpha) {
                ++report.removed_hwe;
                continue;
            }
        }
        if (flip) ++report.flipped;
        out.snp_ids.push_back(input.snp_ids[g]);
        for (const std::int8_t v : row)
            out.genotypes.push_back(v < 0 ? v : (flip ? static_cast<std::int8_t>(2 - v) : v));
    }
    report.survivors = out.snp_count();
    if (report.survivors == 0) throw DataError("qc_filter: no SNPs survived filtering");
    return {std::move(out), report};
}

inline void write_qc_report(const QcReport& r, const std::string& path) {
    auto out = detail::open_output(path);
    out << "filter\tremoved\n";
    out << "call_rate\t" << r.removed_call_rate << '\n';
    out << "maf\t" << r.removed_maf << '\n';
    out << "hwe\t" << r.removed_hwe << '\n';
    out << "flipped\t" << r.flipped << '\n';
    out << "survivors\t" << r.survivors << '\n';
    out << "input\t" << r.input_snps << '\n';
    if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Result files. The mixture and SNP-wise writers share the snp_id / called /
// direction columns so downstream evaluation reads either.

inline void write_results(const MixtureFit& fit, const CallSet& calls,
                          std::span<const std::string> snp_ids, const std::string& path) {
    if (fit.responsibilities.size() != snp_ids.size())
        throw DataError("write_results: fit and snp ids disagree in length");
    std::vector<std::uint8_t> called(snp_ids.size(), 0);
    std::vector<char> direction(snp_ids.size(), '0');
    for (std::size_t i = 0; i < calls.called.size(); ++i) {
        called[calls.called[i]] = 1;
        direction[calls.called[i]] = cluster_symbol(calls.direction[i]);
    }
    auto out = detail::open_output(path);
    out << "snp_id\tgamma0\tgamma_plus\tgamma_minus\tmap_cluster\tcalled\tdirection\n";
    for (std::size_t g = 0; g < snp_ids.size(); ++g) {
        const auto& r = fit.responsibilities[g];
        out << snp_ids[g] << '\t' << detail::format_double("%.6g", r[0]) << '\t'
            << detail::format_double("%.6g", r[1]) << '\t'
            << detail::format_double("%.6g", r[2]) << '\t'
            << cluster_symbol(assign_max_posterior(r)) << '\t'
            << static_cast<int>(called[g]) << '\t'
            << (called[g] ? std::string(1, direction[g]) : std::string("NA")) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

inline void write_snpwise_results(const SnpwiseResult& res,
                                  std::span<const std::string> snp_ids,
                                  const std::string& path) {
    if (res.p_raw.size() != snp_ids.size())
        throw DataError("write_snpwise_results: result and snp ids disagree in length");
    auto out = detail::open_output(path);
    out << "snp_id\tp_raw\tp_adj\tflagged\tcalled\tdirection\n";
    for (std::size_t g = 0; g < snp_ids.size(); ++g) {
        const char* dir = res.called[g] ? (res.direction[g] > 0   ? "+"
                                           : res.direction[g] < 0 ? "-"
                                                                  : "+")
                                        : "NA";
        out << snp_ids[g] << '\t' << detail::format_double("%.6g", res.p_raw[g]) << '\t'
            << detail::format_double("%.6g", res.p_adjusted[g]) << '\t'
            << static_cast<int>(res.flagged[g]) << '\t' << static_cast<int>(res.called[g])
            << '\t' << dir << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

struct CallFile {
    std::vector<std::string> snp_ids;
    std::vector<std::uint8_t> called;
    std::vector<std::int8_t> direction;  // +1 / -1 / 0
};

// Header-driven reader; any TSV carrying snp_id, called and direction works.
inline CallFile read_calls(const std::string& path) {
    auto in = detail::open_input(path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("results file: missing header", 1);
    ++line_no;
    const auto header = detail::split_tabs(line);
    std::size_t id_col = header.size(), called_col = header.size(), dir_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "snp_id") id_col = i;
        if (header[i] == "called") called_col = i;
        if (header[i] == "direction") dir_col = i;
    }
    if (id_col == header.size() || called_col == header.size() || dir_col == header.size())
        throw ParseError("results file: need snp_id, called and direction columns", 1);

    CallFile cf;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != header.size())
            throw ParseError("results file: column count mismatch", line_no);
        cf.snp_ids.emplace_back(fields[id_col]);
        if (fields[called_col] == "1")
            cf.called.push_back(1);
        else if (fields[called_col] == "0")
            cf.called.push_back(0);
        else
            throw ParseError("results file: called must be 0 or 1", line_no);
        if (fields[dir_col] == "+")
            cf.direction.push_back(1);
        else if (fields[dir_col] == "-")
            cf.direction.push_back(-1);
        else
            cf.direction.push_back(0);
    }
    return cf;
}

}  // namespace snpmix
