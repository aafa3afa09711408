#include "fgt2m/schedule.hpp"

namespace fgt2m {

NoiseSchedule make_linear_schedule(int num_steps, double beta_start, double beta_end) {
    if (num_steps < 1) throw ParameterError("schedule needs at least one step");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ParameterError("schedule requires 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.num_steps = num_steps;
    s.betas.resize(num_steps);
    s.alphas.resize(num_steps);
    s.alpha_bars.resize(num_steps);
    s.posterior_variances.resize(num_steps);

    double abar = 1.0;
    for (int t = 1; t <= num_steps; ++t) {
        const double frac = num_steps == 1 ? 0.0 : static_cast<double>(t - 1) / (num_steps - 1);
        const double beta = beta_start + frac * (beta_end - beta_start);
        const double abar_prev = abar;
        abar *= 1.0 - beta;
        s.betas[t - 1] = beta;
        s.alphas[t - 1] = 1.0 - beta;
        s.alpha_bars[t - 1] = abar;
        s.posterior_variances[t - 1] = t == 1 ? beta : beta * (1.0 - abar_prev) / (1.0 - abar);
    }
    return s;
}

} // namespace fgt2m
