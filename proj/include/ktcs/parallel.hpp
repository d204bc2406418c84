// parallel.hpp
// Deterministic data-parallel loop: indices are split into contiguous
// blocks, each worker writes only its own slots, so output ordering never
// depends on scheduling. Thread count is capped by the KTCS_THREADS
// environment variable.

#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ktcs {

inline int thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("KTCS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(long long n, Fn&& fn) {
    const int workers = thread_budget();
    if (workers <= 1 || n < 2) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const long long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long long lo = w * chunk;
        const long long hi = std::min<long long>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace ktcs
