#pragma once

#include <cstddef>
#include <functional>

namespace gpcca {

/// Worker count used when a caller passes threads <= 0: GPCCA_THREADS if set,
/// else hardware concurrency.
int default_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers using static
/// contiguous chunks. Each index runs exactly once; callers write results to
/// disjoint storage and reduce afterwards in index order, which keeps
/// results independent of the thread count. The first exception thrown by
/// any body is rethrown on the calling thread.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace gpcca
