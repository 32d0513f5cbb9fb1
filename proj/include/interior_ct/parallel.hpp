#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace interior_ct {

/// Caps the worker count used by parallel_for (0 keeps the runtime default).
inline void set_thread_cap(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline int thread_index() {
#ifdef _OPENMP
    return omp_get_thread_num();
#else
    return 0;
#endif
}

/// Runs body(i) for i in [0, n); iterations must write disjoint outputs.
template <typename Body>
void parallel_for(int n, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
#else
    for (int i = 0; i < n; ++i) body(i);
#endif
}

} // namespace interior_ct
