#pragma once

#include <exception>

#if defined(BRAR_HAVE_OPENMP)
#include <omp.h>
#endif

namespace brar {

inline int hardware_threads() {
#if defined(BRAR_HAVE_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// threads == 1 selects the serial reference loop; threads == 0 uses the
// OpenMP default.  Callers must make fn(i) independent of execution order so
// both paths produce identical results.
template <class Fn>
void parallel_for(long long n, int threads, Fn&& fn) {
#if defined(BRAR_HAVE_OPENMP)
  if (threads != 1 && n > 1) {
    int nt = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (long long i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
#pragma omp critical(brar_parallel_for_err)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  for (long long i = 0; i < n; ++i) fn(i);
}

}  // namespace brar
