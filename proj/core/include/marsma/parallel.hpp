#pragma once

#include <functional>

namespace marsma {

// Worker count for parallel sections: MARSMA_THREADS when set, otherwise the
// hardware concurrency.
int worker_pool_size();

// Runs fn(0..n-1) on up to worker_pool_size() threads. Results must be
// written to per-index slots; iteration order is unspecified. Nested calls
// run sequentially instead of oversubscribing.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace marsma
