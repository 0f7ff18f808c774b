#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace anasod {

// Every parallel kernel in this library has a serial twin selected through
// this switch; the two must produce bitwise-identical results (each loop
// index writes only its own slots, so scheduling cannot reorder any
// floating-point reduction).
enum class ExecPolicy { Serial, OpenMP };

inline ExecPolicy default_policy() {
#ifdef _OPENMP
  return ExecPolicy::OpenMP;
#else
  return ExecPolicy::Serial;
#endif
}

inline int max_threads(ExecPolicy policy) {
#ifdef _OPENMP
  if (policy == ExecPolicy::OpenMP) return omp_get_max_threads();
#else
  (void)policy;
#endif
  return 1;
}

template <typename Fn>
void parallel_for(std::int64_t n, ExecPolicy policy, Fn&& fn) {
#ifdef _OPENMP
  if (policy == ExecPolicy::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#else
  (void)policy;
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace anasod
