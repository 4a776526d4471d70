#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scf::par {

/// Set the worker count used by the parallel kernels. 0 = all cores.
/// The SCFORGE_WORKERS environment variable overrides a zero setting.
inline void set_workers(int k) {
#ifdef _OPENMP
  if (k <= 0) {
    if (const char* env = std::getenv("SCFORGE_WORKERS")) {
      k = std::atoi(env);
    }
  }
  if (k <= 0) k = omp_get_num_procs();
  omp_set_num_threads(k);
#else
  (void)k;
#endif
}

inline int workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Parallel loop over [0, n). The body must be a pure per-index map
/// (no cross-index writes), so the result is identical for any thread
/// count. Reductions with order-dependent rounding do not belong here.
template <class F>
inline void for_index(long n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) body(i);
#else
  for (long i = 0; i < n; ++i) body(i);
#endif
}

/// Serial twin of for_index, kept so tests and the benchmark can compare
/// the parallel kernels against a plain loop.
template <class F>
inline void for_index_serial(long n, F&& body) {
  for (long i = 0; i < n; ++i) body(i);
}

}  // namespace scf::par
