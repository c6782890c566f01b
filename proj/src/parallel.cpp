#include "auxcell/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace auxcell {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) { g_max_threads = n; }

int max_threads() { return g_max_threads; }

int resolve_threads(int n) {
  int nt = n > 0 ? n : g_max_threads;
#ifdef _OPENMP
  if (nt <= 0) nt = omp_get_max_threads();
  if (g_max_threads > 0 && nt > g_max_threads) nt = g_max_threads;
#else
  nt = 1;
#endif
  return nt < 1 ? 1 : nt;
}

}  // namespace auxcell
