#pragma once

#include <cstdint>

namespace auxcell {

// Process-wide worker cap, set once by the CLI (--threads). 0 = OpenMP default.
void set_max_threads(int n);
int max_threads();

// Resolves a per-call thread request: n <= 0 means "use the global cap".
int resolve_threads(int n);

// Parallel loop over [0, n). Workers must write to disjoint slots; all
// reductions are done serially by the caller so that results do not depend
// on the schedule. body is invoked as body(i).
template <class F>
void par_for(std::int64_t n, int threads, F&& body) {
  const int nt = resolve_threads(threads);
  if (nt == 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace auxcell
