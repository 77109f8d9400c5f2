#pragma once

#include <functional>

namespace hmp::detail {

/// Worker count: hardware concurrency capped by HMP_MAX_THREADS (when set).
int worker_count();

/// Runs body(0..count-1) on up to worker_count() threads. Each index runs
/// exactly once; the exception thrown by the lowest failing index is rethrown.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace hmp::detail
