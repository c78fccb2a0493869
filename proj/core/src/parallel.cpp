#include "afdc/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace afdc {

std::size_t worker_count() {
    static const std::size_t cached = [] {
        if (const char* env = std::getenv("AFDC_THREADS")) {
            long v = std::atol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        }
        unsigned hw = std::thread::hardware_concurrency();
        return static_cast<std::size_t>(hw > 0 ? hw : 1);
    }();
    return cached;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t grain) {
    if (n == 0) return;
    std::size_t workers = worker_count();
    if (workers > n) workers = n;
    if (workers <= 1 || n < 2 || n < grain) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        if (lo >= n) break;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

} // namespace afdc
