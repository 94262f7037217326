#pragma once

#include <cmath>
#include <stdexcept>

#include "lcdn/tensor.hpp"

namespace lcdn {

template <class S>
struct AdamStateT {
    TensorT<S> first_moment;
    TensorT<S> second_moment;
    long step_count = 0;

    AdamStateT() = default;
    explicit AdamStateT(const std::vector<int>& param_shape)
        : first_moment(param_shape), second_moment(param_shape) {}
};

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class S>
void adam_step(TensorT<S>& params, const TensorT<S>& grads, AdamStateT<S>& state, const AdamConfig& cfg) {
    if (!params.same_shape(grads) || !params.same_shape(state.first_moment))
        throw std::invalid_argument("adam_step: shape mismatch param " + shape_str(params.shape) +
                                    " grad " + shape_str(grads.shape));
    state.step_count += 1;
    const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
    const S bias1 = static_cast<S>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count)));
    const S bias2 = static_cast<S>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count)));
    const S lr = static_cast<S>(cfg.lr), eps = static_cast<S>(cfg.eps);
    S* m = state.first_moment.ptr();
    S* v = state.second_moment.ptr();
    S* p = params.ptr();
    const S* g = grads.ptr();
    const std::size_t n = params.numel();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (S(1) - b1) * g[i];
        v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
        const S mhat = m[i] / bias1;
        const S vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

using AdamState = AdamStateT<float>;

} // namespace lcdn
