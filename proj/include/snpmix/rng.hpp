#pragma once

// Counter-based pseudo-random generator. Each (seed, stream, index) key
// hashes to an independent splitmix64 sequence, so per-SNP generation is
// reproducible regardless of execution order or thread count.

#include <cstdint>

namespace snpmix {

namespace detail {

inline std::uint64_t avalanche64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

class KeyedRng {
public:
    using result_type = std::uint64_t;

    KeyedRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
        std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
        h = detail::avalanche64(h + 0xbf58476d1ce4e5b9ULL * (stream + 1));
        h = detail::avalanche64(h ^ (0x94d049bb133111ebULL * (index + 1)));
        state_ = h;
    }

    std::uint64_t operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return detail::avalanche64(state_);
    }

    // Uniform draw strictly inside (0, 1).
    double next_unit() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ULL; }

private:
    std::uint64_t state_;
};

}  // namespace snpmix
