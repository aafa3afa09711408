#pragma once

#include "fgt2m/autodiff.hpp"

namespace fgt2m {

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard bias-corrected Adam over a ParamStore.
class Adam {
public:
    Adam(const ParamStore& store, AdamConfig cfg);
    void step(ParamStore& store, const GradBuffer& grads);
    int steps_taken() const { return step_; }

private:
    AdamConfig cfg_;
    int step_ = 0;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
};

} // namespace fgt2m
