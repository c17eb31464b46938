#pragma once

// Static-chunk parallel map over an index range. Callers write to disjoint
// slots; determinism comes from keyed generators and fixed-order reductions,
// never from scheduling.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace snpmix {

inline unsigned resolve_threads(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const unsigned t = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned k = 0; k < t; ++k) {
        const std::size_t begin = n * k / t;
        const std::size_t end = n * (k + 1) / t;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace snpmix
