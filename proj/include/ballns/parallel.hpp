#pragma once

#include <cstddef>
#include <functional>

namespace ballns {

/// Worker count used by parallel_for. Read once from BALLNS_THREADS, defaulting
/// to the number of hardware threads.
int thread_count();

/// Overrides the worker count for the rest of the process (values < 1 mean 1).
void set_thread_count(int threads);

/// Runs body(i) for i in [begin, end), splitting the range into contiguous
/// chunks across worker threads. body must not touch shared mutable state.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t)>& body);

}  // namespace ballns
