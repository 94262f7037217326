#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lcdn/tensor.hpp"

namespace lcdn {

template <class S>
struct LossResultT {
    double mean_loss = 0;
    TensorT<S> grad_logits;
};

// Mean softmax cross-entropy over the batch. grad = (softmax(logits) - onehot) / N.
// Computed via log-sum-exp so confident wrong predictions cannot produce inf.
template <class S>
LossResultT<S> softmax_cross_entropy(const TensorT<S>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw std::invalid_argument("softmax_cross_entropy: logits must be NxC, got " + shape_str(logits.shape));
    const int N = logits.dim(0), C = logits.dim(1);
    if (static_cast<int>(labels.size()) != N)
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                    " labels for batch " + std::to_string(N));

    LossResultT<S> res;
    res.grad_logits = TensorT<S>({N, C});
    double total = 0;
    const S inv_n = S(1) / static_cast<S>(N);
    for (int n = 0; n < N; ++n) {
        const int label = labels[static_cast<std::size_t>(n)];
        if (label < 0 || label >= C)
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(C) + " classes");
        const S* row = logits.ptr() + static_cast<std::size_t>(n) * C;
        S m = row[0];
        for (int c = 1; c < C; ++c) m = std::max(m, row[c]);
        double sum = 0;
        for (int c = 0; c < C; ++c) sum += std::exp(static_cast<double>(row[c] - m));
        const double lse = static_cast<double>(m) + std::log(sum);
        total += lse - static_cast<double>(row[label]);
        S* grow = res.grad_logits.ptr() + static_cast<std::size_t>(n) * C;
        for (int c = 0; c < C; ++c)
            grow[c] = static_cast<S>(std::exp(static_cast<double>(row[c]) - lse)) * inv_n;
        grow[label] -= inv_n;
    }
    res.mean_loss = total / N;
    return res;
}

} // namespace lcdn
