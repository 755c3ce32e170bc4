#pragma once

#include <cstddef>
#include <functional>

namespace n2i {

/// Worker count: N2I_THREADS if set and positive, otherwise hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n). Iterations are split into contiguous blocks;
/// callers must only write to per-index state so results do not depend on
/// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace n2i
