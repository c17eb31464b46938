#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "snpmix/error.hpp"

namespace snpmix {

inline constexpr std::int8_t kMissingGenotype = -1;

// SNP-major genotype matrix with case/control phenotype labels.
struct GenotypeDataset {
    std::vector<std::string> snp_ids;
    std::vector<std::string> sample_ids;
    std::vector<std::uint8_t> phenotype;  // 1 = case, 0 = control
    std::vector<std::int8_t> genotypes;   // snp_count() * sample_count(), -1 = missing

    std::size_t snp_count() const { return snp_ids.size(); }
    std::size_t sample_count() const { return sample_ids.size(); }

    std::span<const std::int8_t> snp_row(std::size_t g) const {
        return {genotypes.data() + g * sample_count(), sample_count()};
    }
    std::span<std::int8_t> snp_row(std::size_t g) {
        return {genotypes.data() + g * sample_count(), sample_count()};
    }

    std::size_t case_count() const {
        std::size_t n = 0;
        for (auto p : phenotype) n += p;
        return n;
    }

    void validate() const {
        if (sample_ids.size() != phenotype.size())
            throw DataError("dataset: phenotype length does not match sample count");
        if (genotypes.size() != snp_ids.size() * sample_ids.size())
            throw DataError("dataset: genotype matrix does not match id dimensions");
        const std::size_t cases = case_count();
        if (cases == 0 || cases == sample_ids.size())
            throw DataError("dataset: need at least one case and one control");
        std::unordered_set<std::string> seen;
        seen.reserve(snp_ids.size());
        for (const auto& id : snp_ids)
            if (!seen.insert(id).second)
                throw DataError("dataset: duplicate SNP id '" + id + "'");
    }
};

}  // namespace snpmix
