#pragma once

#include <cstddef>
#include <functional>

namespace segt {

/// Worker count: SEGT_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs fn(i) for i in [0, n) on up to `thread_count()` threads. Each index
/// runs exactly once, so results written to slot i do not depend on the
/// thread count. The first exception (lowest index) is rethrown after all
/// workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace segt
