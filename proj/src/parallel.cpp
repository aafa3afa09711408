#include "fgt2m/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fgt2m {

int resolve_threads(const ExecOptions& opt) {
    if (opt.policy == ExecPolicy::Serial) return 1;
    if (opt.threads > 0) return opt.threads;
#ifdef _OPENMP
    return std::max(1, omp_get_max_threads());
#else
    return 1;
#endif
}

void parallel_for(int n, const ExecOptions& opt, const std::function<void(int)>& body) {
    if (n <= 0) return;
    const int workers = std::min(resolve_threads(opt), n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(workers)
    for (int i = 0; i < n; ++i) body(i);
}

} // namespace fgt2m
