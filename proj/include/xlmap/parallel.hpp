#pragma once

#include <cstddef>
#include <functional>

namespace xlmap {

/// Worker cap used by parallel_for. 0 means "all hardware threads".
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Runs body(i) for every i in [0, count). Work is handed out in index order
/// to at most num_threads() workers; callers that reduce must write into
/// per-index slots and combine them afterwards in index order so the result
/// does not depend on the worker count. The first exception thrown by any
/// body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace xlmap
