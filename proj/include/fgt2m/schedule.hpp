#pragma once

#include "fgt2m/errors.hpp"

#include <Eigen/Core>

namespace fgt2m {

// Precomputed variance schedule for all diffusion steps. Steps are
// 1-indexed end-inclusive; accessors bounds-check. Immutable after
// construction and safe to share across threads.
struct NoiseSchedule {
    int num_steps = 0;
    Eigen::VectorXd betas;               // β_t
    Eigen::VectorXd alphas;              // α_t = 1 − β_t
    Eigen::VectorXd alpha_bars;          // ᾱ_t = Π_{s≤t} α_s
    Eigen::VectorXd posterior_variances; // β̃_t = β_t (1−ᾱ_{t−1})/(1−ᾱ_t), β̃_1 = β_1

    double beta(int t) const { return betas[check(t)]; }
    double alpha(int t) const { return alphas[check(t)]; }
    double alpha_bar(int t) const { return alpha_bars[check(t)]; }
    double posterior_variance(int t) const { return posterior_variances[check(t)]; }
    // ᾱ_{t−1} with the ᾱ_0 = 1 convention.
    double alpha_bar_prev(int t) const { return check(t), t == 1 ? 1.0 : alpha_bars[t - 2]; }

    int check(int t) const {
        if (t < 1 || t > num_steps)
            throw IndexError("diffusion step " + std::to_string(t) + " out of range [1, " +
                             std::to_string(num_steps) + "]");
        return t - 1;
    }
};

NoiseSchedule make_linear_schedule(int num_steps, double beta_start, double beta_end);

} // namespace fgt2m
