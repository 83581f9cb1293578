#ifndef HALFFACE_PARALLEL_HPP
#define HALFFACE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace halfface {

/// Worker cap: the HALFFACE_THREADS environment variable when set, otherwise
/// the hardware concurrency. Always >= 1.
size_t worker_count();

/// Runs fn(i) for i in [0, n). Each index is processed exactly once; results
/// must be written to per-index slots so that the outcome is independent of
/// the thread count. `threads` == 0 means worker_count().
void parallel_for(size_t n, const std::function<void(size_t)>& fn, size_t threads = 0);

} // namespace halfface

#endif
