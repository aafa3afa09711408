#pragma once

#include "fgt2m/adam.hpp"
#include "fgt2m/model.hpp"
#include "fgt2m/parallel.hpp"
#include "fgt2m/toy_dataset.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace fgt2m {

struct TrainOptions {
    int iters = 2000;
    int batch = 128;
    double lr = 5e-5;
    std::uint64_t seed = 11;
    int log_every = 50;
    // Stop when the smoothed loss fails to improve by min_delta for
    // `patience` consecutive log points (0 disables).
    int early_stop_patience = 0;
    double early_stop_min_delta = 1e-4;
    int eval_every = 0; // run periodic_eval every k iterations (0 disables)
    ExecOptions exec;
    std::filesystem::path log_path; // append-only CSV when set
};

struct EvalPoint {
    double r_top1 = 0.0;
    double r_top3 = 0.0;
    double fid = 0.0;
};

struct TrainResult {
    double final_loss = 0.0;
    int iterations_run = 0;
    std::vector<std::pair<int, double>> loss_log;
};

using PeriodicEval = std::function<EvalPoint(const TextMotionModel&, int iter)>;

// Batched x₀-prediction training. Per-item seeds derive from
// (seed, iteration, batch slot); gradients accumulate in per-worker buffers
// folded in worker order, so a run is reproducible for a fixed thread count
// and bit-identical to the serial policy when one worker is used.
TrainResult train_diffusion(TextMotionModel& model, const std::vector<DatasetRecord>& records,
                            const NoiseSchedule& sched, const TrainOptions& opt,
                            const PeriodicEval& periodic_eval = nullptr);

} // namespace fgt2m
