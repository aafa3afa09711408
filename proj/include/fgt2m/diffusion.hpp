#pragma once

#include "fgt2m/rng.hpp"
#include "fgt2m/schedule.hpp"

#include <Eigen/Core>
#include <functional>

namespace fgt2m {

using Mat = Eigen::MatrixXd;

// A denoiser maps (x_t, t) to an estimate of the clean sequence x̂₀; the
// text condition is bound into the callable by the caller.
using DenoiserFn = std::function<Mat(const Mat& x_t, int t)>;

// Closed-form forward noising: x_t = √ᾱ_t·x₀ + √(1−ᾱ_t)·ε.
Mat q_sample(const Mat& x0, int t, const Mat& eps, const NoiseSchedule& sched);

// Mean squared error between x₀ and the denoiser's x̂₀(x_t, t). The
// differentiable route lives on the autodiff tape inside the trainer; this
// evaluation-path twin shares the exact arithmetic.
double training_loss(const DenoiserFn& denoiser, const Mat& x0, int t, const Mat& eps,
                     const NoiseSchedule& sched);

// Posterior mean of x_{t−1} given x_t and a clean estimate:
// μ_t = (√ᾱ_{t−1}·β_t/(1−ᾱ_t))·x̂₀ + (√α_t·(1−ᾱ_{t−1})/(1−ᾱ_t))·x_t.
Mat posterior_mean(const Mat& x0_hat, const Mat& x_t, int t, const NoiseSchedule& sched);

struct SampleOptions {
    // Clamp x̂₀ into [−clamp, clamp] during sampling when > 0; off by default.
    double clamp = 0.0;
};

// One reverse step: μ_t + √β̃_t·z for t > 1, exactly μ_1 at the final step.
Mat p_sample_step(const DenoiserFn& denoiser, const Mat& x_t, int t, const NoiseSchedule& sched,
                  Rng& rng, const SampleOptions& opt = {});

// Full reverse chain from x_T ~ N(0, I) of shape frames×channels down to a
// clean sample. Throws NumericError naming the step if values diverge.
Mat sample_loop(const DenoiserFn& denoiser, int frames, int channels, const NoiseSchedule& sched,
                Rng& rng, const SampleOptions& opt = {});

} // namespace fgt2m
