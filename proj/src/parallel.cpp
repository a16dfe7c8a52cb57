#include "amcn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace amcn {

namespace {
std::atomic<int> g_thread_cap{1};
}

void set_thread_cap(int threads) { g_thread_cap.store(threads < 1 ? 1 : threads); }

int thread_cap() { return g_thread_cap.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& block_fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(thread_cap()), n);
    if (workers <= 1) {
        block_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&block_fn, lo, hi] { block_fn(lo, hi); });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace amcn
