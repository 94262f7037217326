#pragma once

// Central finite-difference oracle for gradient checks. Kept independent of
// backward_layer: it only ever calls the forward path.

#include <algorithm>
#include <cmath>
#include <functional>

#include "lcdn/tensor.hpp"

namespace gradcheck {

// d/dx_i of f() by central differences, perturbing x in place.
template <class S, class Fn>
double fd_partial(Fn&& f, lcdn::TensorT<S>& x, std::size_t i, double h) {
    const S orig = x[i];
    x[i] = static_cast<S>(orig + h);
    const double fp = f();
    x[i] = static_cast<S>(orig - h);
    const double fm = f();
    x[i] = orig;
    return (fp - fm) / (2.0 * h);
}

inline double rel_err(double analytic, double numeric, double floor_scale) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor_scale});
    return std::abs(analytic - numeric) / denom;
}

// Sweep every coordinate of x; returns the worst relative error.
template <class S, class Fn>
double max_rel_err(Fn&& f, lcdn::TensorT<S>& x, const lcdn::TensorT<S>& analytic, double h,
                   double floor_scale = 1e-2) {
    double worst = 0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double num = fd_partial(f, x, i, h);
        worst = std::max(worst, rel_err(static_cast<double>(analytic[i]), num, floor_scale));
    }
    return worst;
}

} // namespace gradcheck
