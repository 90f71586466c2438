#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace ccnn {

// Process-wide worker count for parallel_for (set from the CLI --threads flag).
inline int& thread_count() {
    static int n = 1;
    return n;
}

// Splits [0, n) into contiguous chunks, one per worker. Each index is
// processed by exactly one worker, so results are identical for any thread
// count (no reduction-order dependence).
template <class F>
void parallel_for(int64_t n, F&& body) {
    int workers = std::min<int64_t>(thread_count(), n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int64_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int64_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace ccnn
