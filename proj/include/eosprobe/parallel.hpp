#pragma once

#include <functional>

namespace eosprobe {

/// Global worker-thread budget for per-example evaluation. Results never
/// depend on it: reductions always follow the same fixed tree.
int thread_count() noexcept;
void set_thread_count(int n) noexcept;

/// Runs fn(i) for i in [0, n) across the worker budget. Work items are
/// claimed dynamically; each item writes only its own slot, so the caller's
/// final merge order decides determinism.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace eosprobe
