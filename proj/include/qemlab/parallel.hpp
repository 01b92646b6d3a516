#ifndef QEMLAB_PARALLEL_HPP
#define QEMLAB_PARALLEL_HPP

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace qemlab {

// Worker cap: hardware concurrency, limited by the QEMLAB_THREADS env var.
inline int worker_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("QEMLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

// Row-parallel loop over [0, count). Each index is processed exactly once and
// writes only to its own outputs, so results are identical to a serial run.
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn) {
    const int workers = worker_threads();
    if (workers <= 1 || count < 256) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace qemlab

#endif
