#pragma once

#include <cstddef>
#include <functional>

namespace afdc {

/// Worker count used by parallel_for and the dataset builder.
/// AFDC_THREADS caps it; unset or 0 means hardware concurrency.
std::size_t worker_count();

/// Runs fn(begin, end) over contiguous chunks of [0, n), possibly on several
/// threads. Each index is processed exactly once by exactly one worker, so
/// per-element arithmetic order is identical to the sequential run and
/// results are bitwise independent of the thread count. Ranges smaller than
/// `grain` stay on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t grain = 1);

} // namespace afdc
