#pragma once

#include <functional>
#include <vector>

namespace fgt2m {

// Every data-parallel kernel in the library (batch gradient accumulation,
// sampling chains, record generation) runs under one of two policies:
// the OpenMP path used in production and a serial reference path kept for
// testing. Results are deterministic for a fixed (policy, threads) pair:
// workers own contiguous index ranges and per-worker state is folded in
// worker order.
enum class ExecPolicy { Serial, OpenMP };

struct ExecOptions {
    ExecPolicy policy = ExecPolicy::OpenMP;
    int threads = 0; // 0 = OpenMP runtime default
};

int resolve_threads(const ExecOptions& opt);

// Independent iterations; no shared mutable state.
void parallel_for(int n, const ExecOptions& opt, const std::function<void(int)>& body);

// Partitioned loop with per-worker accumulator state. `make` builds one
// state per worker, `work` processes [begin, end) into it, and `fold`
// consumes the states in worker order (index 0 first).
template <typename State>
void parallel_partition(int n, const ExecOptions& opt,
                        const std::function<State()>& make,
                        const std::function<void(State&, int, int)>& work,
                        const std::function<void(State&)>& fold) {
    const int workers = (opt.policy == ExecPolicy::Serial) ? 1 : std::max(1, std::min(resolve_threads(opt), n));
    if (n <= 0) return;
    const int chunk = (n + workers - 1) / workers;

    std::vector<State> states;
    states.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) states.push_back(make());

    if (workers == 1) {
        work(states[0], 0, n);
    } else {
#pragma omp parallel for schedule(static, 1) num_threads(workers)
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n, begin + chunk);
            if (begin < end) work(states[static_cast<std::size_t>(w)], begin, end);
        }
    }
    for (auto& s : states) fold(s);
}

} // namespace fgt2m
