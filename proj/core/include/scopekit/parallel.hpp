#pragma once

#include <cstddef>
#include <functional>

namespace scopekit {

/// Worker count used by row/batch parallel loops. Reads SCOPEKIT_THREADS once;
/// falls back to std::thread::hardware_concurrency().
std::size_t thread_count();

/// Overrides the worker count for the current process (0 restores the default).
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [begin, end). Every index is visited exactly once and
/// bodies must only write to index-owned state, so results do not depend on the
/// number of workers.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace scopekit
