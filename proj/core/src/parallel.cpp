#include "wmcf/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef WMCF_HAVE_OPENMP
#include <omp.h>
#endif

namespace wmcf {

int configure_threads() {
  if (const char* env = std::getenv("WMCF_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) set_threads(n);
    } catch (const std::exception&) {
      // Ignore malformed values; keep the runtime default.
    }
  }
  return thread_count();
}

void set_threads(int n) {
#ifdef WMCF_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef WMCF_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace wmcf
