#pragma once

#include <cstddef>
#include <functional>

namespace rulforge {

/// Worker cap: RULFORGE_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_threads();

/// Runs fn(0) ... fn(n-1) on up to `threads` threads. Every index runs even if
/// some throw; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = worker_threads());

}  // namespace rulforge
