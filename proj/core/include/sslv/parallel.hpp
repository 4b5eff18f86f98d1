#pragma once

#include <cstdint>
#include <functional>

namespace sslv {

// Worker count used by parallel_for. 0 selects hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(begin, end) over a static partition of [0, n). Chunks are disjoint,
// so fn must only write state owned by its index range; reductions that are
// order-sensitive stay outside. Results never depend on the worker count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace sslv
