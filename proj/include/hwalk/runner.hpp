#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

// Trial fan-out.  Callers preallocate one output slot per index and let the
// body fill slot i only, so the aggregate downstream is identical for any
// worker count; all reductions happen after the loop, in index order.

namespace hwalk {

// Worker count implied by a --workers value: positive is literal, anything
// else picks the hardware concurrency.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs body(i) for i in [0, n).  With workers > 1 the iterations spread
// over an OpenMP pool (dynamic schedule, iterations must be independent);
// otherwise a plain serial loop, kept as the reference implementation the
// tests and the benchmark compare against.  When iterations throw, the
// lowest-index exception is rethrown after the loop drains, matching what
// the serial path would have surfaced first.
inline void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  if (n <= 0) return;
#ifdef _OPENMP
  if (workers > 1) {
    std::vector<std::exception_ptr> errs(static_cast<size_t>(n));
    bool failed = false;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errs[static_cast<size_t>(i)] = std::current_exception();
#pragma omp atomic write
        failed = true;
      }
    }
    if (failed)
      for (const std::exception_ptr& e : errs)
        if (e) std::rethrow_exception(e);
    return;
  }
#else
  (void)workers;
#endif
  for (int i = 0; i < n; ++i) body(i);
}

}  // namespace hwalk
