#include "fgt2m/diffusion.hpp"

#include <cmath>

namespace fgt2m {

Mat q_sample(const Mat& x0, int t, const Mat& eps, const NoiseSchedule& sched) {
    if (eps.rows() != x0.rows() || eps.cols() != x0.cols())
        throw ContractError("q_sample: eps shape must match x0");
    const double abar = sched.alpha_bar(t);
    return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

double training_loss(const DenoiserFn& denoiser, const Mat& x0, int t, const Mat& eps,
                     const NoiseSchedule& sched) {
    const Mat x_t = q_sample(x0, t, eps, sched);
    const Mat x0_hat = denoiser(x_t, t);
    if (x0_hat.rows() != x0.rows() || x0_hat.cols() != x0.cols())
        throw ContractError("training_loss: denoiser output shape " + std::to_string(x0_hat.rows()) + "x" +
                            std::to_string(x0_hat.cols()) + " does not match x0");
    return (x0 - x0_hat).array().square().mean();
}

Mat posterior_mean(const Mat& x0_hat, const Mat& x_t, int t, const NoiseSchedule& sched) {
    const double abar = sched.alpha_bar(t);
    const double abar_prev = sched.alpha_bar_prev(t);
    const double beta = sched.beta(t);
    const double alpha = sched.alpha(t);
    const double c0 = std::sqrt(abar_prev) * beta / (1.0 - abar);
    const double ct = std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar);
    return c0 * x0_hat + ct * x_t;
}

Mat p_sample_step(const DenoiserFn& denoiser, const Mat& x_t, int t, const NoiseSchedule& sched,
                  Rng& rng, const SampleOptions& opt) {
    Mat x0_hat = denoiser(x_t, t);
    if (x0_hat.rows() != x_t.rows() || x0_hat.cols() != x_t.cols())
        throw ContractError("p_sample_step: denoiser output shape does not match x_t");
    if (opt.clamp > 0.0) x0_hat = x0_hat.cwiseMax(-opt.clamp).cwiseMin(opt.clamp);
    Mat mean = posterior_mean(x0_hat, x_t, t, sched);
    if (t == 1) return mean; // final step adds no noise
    const double sigma = std::sqrt(sched.posterior_variance(t));
    return mean + sigma * rng.normal_mat(x_t.rows(), x_t.cols());
}

Mat sample_loop(const DenoiserFn& denoiser, int frames, int channels, const NoiseSchedule& sched,
                Rng& rng, const SampleOptions& opt) {
    if (frames < 1 || channels < 1) throw ContractError("sample_loop: frames and channels must be positive");
    Mat x = rng.normal_mat(frames, channels);
    for (int t = sched.num_steps; t >= 1; --t) {
        x = p_sample_step(denoiser, x, t, sched, rng, opt);
        if (!x.allFinite())
            throw NumericError("sample_loop: non-finite values at step " + std::to_string(t));
    }
    return x;
}

} // namespace fgt2m
