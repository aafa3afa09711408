#include "fgt2m/adam.hpp"

#include <cmath>

namespace fgt2m {

Adam::Adam(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(static_cast<std::size_t>(store.count()));
    v_.reserve(static_cast<std::size_t>(store.count()));
    for (int i = 0; i < store.count(); ++i) {
        m_.emplace_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
        v_.emplace_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
    }
}

void Adam::step(ParamStore& store, const GradBuffer& grads) {
    if (grads.count() != store.count()) throw ContractError("Adam: gradient buffer does not match the store");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
    for (int i = 0; i < store.count(); ++i) {
        const Mat& g = grads.grad(i);
        Mat& m = m_[static_cast<std::size_t>(i)];
        Mat& v = v_[static_cast<std::size_t>(i)];
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        const Mat m_hat = m / bc1;
        const Mat v_hat = v / bc2;
        store.value(i).array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
    }
}

} // namespace fgt2m
