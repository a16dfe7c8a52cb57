#pragma once

#include <cstddef>
#include <functional>

namespace amcn {

// Process-wide cap on worker threads, set once by the CLI. Default 1.
void set_thread_cap(int threads);
int thread_cap();

// Splits [0, n) into contiguous blocks, one per worker. Each index is
// visited exactly once, so writers to disjoint slots stay race-free and
// results are identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& block_fn);

}  // namespace amcn
