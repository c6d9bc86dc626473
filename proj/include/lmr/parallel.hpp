#pragma once

#include <cstddef>
#include <functional>

namespace lmr {

// Worker cap from the LMR_THREADS environment variable; 1 when unset.
std::size_t max_threads();

// Runs fn(0..n-1), chunked over at most max_threads() workers. Each index
// writes only its own slot, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace lmr
