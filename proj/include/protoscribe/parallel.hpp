#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace protoscribe {

/// Worker count used by parallel_for when the caller passes 0.
/// PROTOSCRIBE_THREADS wins over hardware_concurrency.
inline int effective_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PROTOSCRIBE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

/// Runs fn(i) for i in [0,n). Results must be written to per-index slots:
/// outputs are then independent of the thread count and schedule.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, int threads = 0) {
    int workers = std::min<std::size_t>(std::size_t(effective_threads(threads)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = std::size_t(w); i < n; i += std::size_t(workers)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace protoscribe
