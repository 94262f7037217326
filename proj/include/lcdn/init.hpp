#pragma once

#include <cmath>
#include <stdexcept>

#include "lcdn/rng.hpp"
#include "lcdn/tensor.hpp"

namespace lcdn {

// Glorot/Xavier uniform: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
// Keras default for dense and conv kernels; biases start at zero.
template <class S>
TensorT<S> glorot_uniform(int fan_in, int fan_out, const std::vector<int>& shape, Rng& rng) {
    if (fan_in <= 0 || fan_out <= 0)
        throw std::invalid_argument("glorot_uniform: fans must be positive");
    const double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
    TensorT<S> t(shape);
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<S>(rng.uniform(-limit, limit));
    return t;
}

} // namespace lcdn
