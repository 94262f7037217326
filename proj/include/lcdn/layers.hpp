#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lcdn/rng.hpp"
#include "lcdn/tensor.hpp"

namespace lcdn {

enum class LayerKind { conv2d, maxpool2d, dropout, dense, concat, flatten };

inline const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::dropout: return "dropout";
        case LayerKind::dense: return "dense";
        case LayerKind::concat: return "concat";
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

// Geometry is fixed: conv is stride (1,1) SAME, pool is stride (2,2) SAME.
struct LayerSpec {
    LayerKind kind = LayerKind::conv2d;
    int kernel = 0;   // conv, pool
    int filters = 0;  // conv
    int units = 0;    // dense
    double rate = 0;  // dropout

    std::string describe() const {
        std::string s = kind_name(kind);
        switch (kind) {
            case LayerKind::conv2d: s += " k" + std::to_string(kernel) + " f" + std::to_string(filters); break;
            case LayerKind::maxpool2d: s += " k" + std::to_string(kernel); break;
            case LayerKind::dense: s += " u" + std::to_string(units); break;
            case LayerKind::dropout: s += " r" + std::to_string(rate).substr(0, 4); break;
            default: break;
        }
        return s;
    }
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

enum class RunMode { train, infer };

template <class S>
struct LayerCacheT {
    LayerKind kind{};
    bool train_mode = false;
    std::vector<const TensorT<S>*> inputs; // borrowed; caller keeps them alive until backward
    TensorT<S> mask;                       // dropout: scaled keep mask
    std::vector<std::int64_t> argmax;      // maxpool: flat input index per output element
    int crop_h = 0, crop_w = 0;            // concat: aligned spatial size
};

template <class S>
struct LayerGradsT {
    std::vector<TensorT<S>> inputs; // one per forward input
    std::vector<TensorT<S>> params; // one per parameter tensor
};

namespace detail {

template <class S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapM = Eigen::Map<MatRM<S>>;
template <class S>
using CMapM = Eigen::Map<const MatRM<S>>;

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

inline void require_rank4(const LayerSpec& spec, const std::vector<int>& shp) {
    require(shp.size() == 4, spec.describe() + ": expected NHWC input, got " + shape_str(shp));
}

// SAME padding offsets for stride 1 (conv) keep H and W; the extra cell of an
// even kernel pads bottom/right.
inline int same_pad_begin(int kernel) { return (kernel - 1) / 2; }

inline int pool_out(int n) { return (n + 1) / 2; }

inline int pool_pad_begin(int in, int kernel) {
    int total = std::max((pool_out(in) - 1) * 2 + kernel - in, 0);
    return total / 2;
}

// im2col for one chunk of samples: rows (n,y,x) in chunk order, cols (dy,dx,c).
template <class S>
void im2col(const S* in, int H, int W, int C, int k, int n0, int n1, MatRM<S>& cols) {
    const int pad = same_pad_begin(k);
    const std::int64_t row_len = static_cast<std::int64_t>(k) * k * C;
    cols.resize(static_cast<std::int64_t>(n1 - n0) * H * W, row_len);
    std::int64_t r = 0;
    for (int n = n0; n < n1; ++n) {
        const S* img = in + static_cast<std::int64_t>(n) * H * W * C;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x, ++r) {
                S* dst = cols.data() + r * row_len;
                for (int dy = 0; dy < k; ++dy) {
                    const int iy = y + dy - pad;
                    for (int dx = 0; dx < k; ++dx, dst += C) {
                        const int ix = x + dx - pad;
                        if (iy < 0 || iy >= H || ix < 0 || ix >= W) {
                            std::fill(dst, dst + C, S(0));
                        } else {
                            const S* src = img + (static_cast<std::int64_t>(iy) * W + ix) * C;
                            std::copy(src, src + C, dst);
                        }
                    }
                }
            }
        }
    }
}

// scatter-add transpose of im2col
template <class S>
void col2im_add(const MatRM<S>& cols, int H, int W, int C, int k, int n0, int n1, S* din) {
    const int pad = same_pad_begin(k);
    const std::int64_t row_len = static_cast<std::int64_t>(k) * k * C;
    std::int64_t r = 0;
    for (int n = n0; n < n1; ++n) {
        S* img = din + static_cast<std::int64_t>(n) * H * W * C;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x, ++r) {
                const S* src = cols.data() + r * row_len;
                for (int dy = 0; dy < k; ++dy) {
                    const int iy = y + dy - pad;
                    for (int dx = 0; dx < k; ++dx, src += C) {
                        const int ix = x + dx - pad;
                        if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                        S* dst = img + (static_cast<std::int64_t>(iy) * W + ix) * C;
                        for (int c = 0; c < C; ++c) dst[c] += src[c];
                    }
                }
            }
        }
    }
}

// chunk the batch so the im2col buffer stays modest
inline int conv_chunk(int H, int W, int C, int k, std::size_t scalar_size) {
    const std::int64_t per_sample = static_cast<std::int64_t>(H) * W * k * k * C * static_cast<std::int64_t>(scalar_size);
    const std::int64_t budget = 48ll << 20;
    return static_cast<int>(std::max<std::int64_t>(1, budget / std::max<std::int64_t>(per_sample, 1)));
}

} // namespace detail

template <class S>
std::pair<TensorT<S>, LayerCacheT<S>> forward_layer(const LayerSpec& spec,
                                                    const std::vector<TensorT<S>>& params,
                                                    const std::vector<const TensorT<S>*>& inputs,
                                                    RunMode mode, Rng& rng) {
    using namespace detail;
    LayerCacheT<S> cache;
    cache.kind = spec.kind;
    cache.train_mode = (mode == RunMode::train);
    cache.inputs = inputs;

    if (spec.kind != LayerKind::concat)
        require(inputs.size() == 1, std::string(spec.describe()) + ": expected 1 input, got " +
                                        std::to_string(inputs.size()));

    switch (spec.kind) {
        case LayerKind::conv2d: {
            const TensorT<S>& in = *inputs[0];
            require_rank4(spec, in.shape);
            const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
            require(params.size() == 2, "conv2d: missing parameters");
            const TensorT<S>& weight = params[0];
            const TensorT<S>& bias = params[1];
            const int k = spec.kernel, F = spec.filters;
            require(weight.shape == std::vector<int>({k, k, C, F}),
                    spec.describe() + ": weight shape " + shape_str(weight.shape) +
                        " does not match input " + shape_str(in.shape));
            require(bias.shape == std::vector<int>({F}), "conv2d: bias shape mismatch");

            TensorT<S> out({N, H, W, F});
            CMapM<S> wmat(weight.ptr(), static_cast<std::int64_t>(k) * k * C, F);
            Eigen::Map<const Eigen::RowVector<S, Eigen::Dynamic>> bvec(bias.ptr(), F);
            MatRM<S> cols;
            const int chunk = conv_chunk(H, W, C, k, sizeof(S));
            for (int n0 = 0; n0 < N; n0 += chunk) {
                const int n1 = std::min(N, n0 + chunk);
                im2col(in.ptr(), H, W, C, k, n0, n1, cols);
                MapM<S> omat(out.ptr() + static_cast<std::int64_t>(n0) * H * W * F, cols.rows(), F);
                omat.noalias() = cols * wmat;
                omat.rowwise() += bvec;
            }
            return {std::move(out), std::move(cache)};
        }

        case LayerKind::maxpool2d: {
            const TensorT<S>& in = *inputs[0];
            require_rank4(spec, in.shape);
            const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
            const int k = spec.kernel;
            const int Ho = pool_out(H), Wo = pool_out(W);
            const int py = pool_pad_begin(H, k), px = pool_pad_begin(W, k);
            TensorT<S> out({N, Ho, Wo, C});
            cache.argmax.assign(out.numel(), -1);
            std::int64_t o = 0;
            for (int n = 0; n < N; ++n) {
                const S* img = in.ptr() + static_cast<std::int64_t>(n) * H * W * C;
                for (int y = 0; y < Ho; ++y) {
                    for (int x = 0; x < Wo; ++x) {
                        for (int c = 0; c < C; ++c, ++o) {
                            S best = 0;
                            std::int64_t best_i = -1;
                            for (int dy = 0; dy < k; ++dy) {
                                const int iy = y * 2 - py + dy;
                                if (iy < 0 || iy >= H) continue;
                                for (int dx = 0; dx < k; ++dx) {
                                    const int ix = x * 2 - px + dx;
                                    if (ix < 0 || ix >= W) continue;
                                    const std::int64_t idx = (static_cast<std::int64_t>(iy) * W + ix) * C + c;
                                    if (best_i < 0 || img[idx] > best) {
                                        best = img[idx];
                                        best_i = idx;
                                    }
                                }
                            }
                            require(best_i >= 0, "maxpool2d: empty window");
                            out[static_cast<std::size_t>(o)] = best;
                            cache.argmax[static_cast<std::size_t>(o)] =
                                best_i + static_cast<std::int64_t>(n) * H * W * C;
                        }
                    }
                }
            }
            return {std::move(out), std::move(cache)};
        }

        case LayerKind::dropout: {
            const TensorT<S>& in = *inputs[0];
            if (mode == RunMode::infer) return {in, std::move(cache)};
            // inverted dropout: scale kept units by 1/(1-rate) so expectation matches infer
            const S keep_scale = static_cast<S>(1.0 / (1.0 - spec.rate));
            cache.mask = TensorT<S>(in.shape);
            TensorT<S> out(in.shape);
            for (std::size_t i = 0; i < in.numel(); ++i) {
                const S m = rng.u01() < spec.rate ? S(0) : keep_scale;
                cache.mask[i] = m;
                out[i] = in[i] * m;
            }
            return {std::move(out), std::move(cache)};
        }

        case LayerKind::dense: {
            const TensorT<S>& in = *inputs[0];
            require(in.rank() == 2, spec.describe() + ": expected flat NxF input, got " + shape_str(in.shape));
            const int N = in.dim(0), Fin = in.dim(1);
            require(params.size() == 2, "dense: missing parameters");
            const TensorT<S>& weight = params[0];
            const TensorT<S>& bias = params[1];
            require(weight.shape == std::vector<int>({Fin, spec.units}),
                    spec.describe() + ": weight shape " + shape_str(weight.shape) +
                        " does not match input " + shape_str(in.shape));
            require(bias.shape == std::vector<int>({spec.units}), "dense: bias shape mismatch");
            TensorT<S> out({N, spec.units});
            CMapM<S> x(in.ptr(), N, Fin), w(weight.ptr(), Fin, spec.units);
            Eigen::Map<const Eigen::RowVector<S, Eigen::Dynamic>> b(bias.ptr(), spec.units);
            MapM<S> y(out.ptr(), N, spec.units);
            y.noalias() = x * w;
            y.rowwise() += b;
            return {std::move(out), std::move(cache)};
        }

        case LayerKind::concat: {
            require(!inputs.empty(), "concat: no inputs");
            int N = -1, minH = 0, minW = 0, Csum = 0;
            for (const TensorT<S>* t : inputs) {
                require_rank4(spec, t->shape);
                if (N < 0) {
                    N = t->dim(0);
                    minH = t->dim(1);
                    minW = t->dim(2);
                }
                require(t->dim(0) == N, "concat: batch size mismatch " + shape_str(t->shape));
                minH = std::min(minH, t->dim(1));
                minW = std::min(minW, t->dim(2));
                Csum += t->dim(3);
            }
            // inputs are pre-aligned by assembly; trim any off-by-one remainder at bottom/right
            for (const TensorT<S>* t : inputs)
                require(t->dim(1) - minH <= 1 && t->dim(2) - minW <= 1,
                        "concat: unaligned inputs " + shape_str(t->shape) + " vs " +
                            std::to_string(minH) + "x" + std::to_string(minW));
            cache.crop_h = minH;
            cache.crop_w = minW;
            TensorT<S> out({N, minH, minW, Csum});
            for (int n = 0; n < N; ++n) {
                for (int y = 0; y < minH; ++y) {
                    for (int x = 0; x < minW; ++x) {
                        S* dst = out.ptr() + ((static_cast<std::int64_t>(n) * minH + y) * minW + x) * Csum;
                        for (const TensorT<S>* t : inputs) {
                            const int H = t->dim(1), W = t->dim(2), C = t->dim(3);
                            const S* src = t->ptr() + ((static_cast<std::int64_t>(n) * H + y) * W + x) * C;
                            std::copy(src, src + C, dst);
                            dst += C;
                        }
                    }
                }
            }
            return {std::move(out), std::move(cache)};
        }

        case LayerKind::flatten: {
            const TensorT<S>& in = *inputs[0];
            require_rank4(spec, in.shape);
            return {in.reshaped({in.dim(0), in.dim(1) * in.dim(2) * in.dim(3)}), std::move(cache)};
        }
    }
    throw std::logic_error("forward_layer: unknown kind");
}

template <class S>
LayerGradsT<S> backward_layer(const LayerSpec& spec, const std::vector<TensorT<S>>& params,
                              const LayerCacheT<S>& cache, const TensorT<S>& grad_out) {
    using namespace detail;
    require(cache.kind == spec.kind, "backward_layer: cache does not match spec");
    LayerGradsT<S> g;

    switch (spec.kind) {
        case LayerKind::conv2d: {
            const TensorT<S>& in = *cache.inputs[0];
            const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
            const int k = spec.kernel, F = spec.filters;
            require(grad_out.shape == std::vector<int>({N, H, W, F}),
                    "conv2d backward: grad shape " + shape_str(grad_out.shape));
            const TensorT<S>& weight = params[0];
            TensorT<S> dw(weight.shape), db({F}), dx(in.shape);
            CMapM<S> wmat(weight.ptr(), static_cast<std::int64_t>(k) * k * C, F);
            MapM<S> dwmat(dw.ptr(), static_cast<std::int64_t>(k) * k * C, F);
            Eigen::Map<Eigen::RowVector<S, Eigen::Dynamic>> dbvec(db.ptr(), F);
            MatRM<S> cols, dcols;
            const int chunk = conv_chunk(H, W, C, k, sizeof(S));
            for (int n0 = 0; n0 < N; n0 += chunk) {
                const int n1 = std::min(N, n0 + chunk);
                im2col(in.ptr(), H, W, C, k, n0, n1, cols);
                CMapM<S> go(grad_out.ptr() + static_cast<std::int64_t>(n0) * H * W * F, cols.rows(), F);
                dwmat.noalias() += cols.transpose() * go;
                dbvec += go.colwise().sum();
                dcols.noalias() = go * wmat.transpose();
                col2im_add(dcols, H, W, C, k, n0, n1, dx.ptr());
            }
            g.inputs.push_back(std::move(dx));
            g.params.push_back(std::move(dw));
            g.params.push_back(std::move(db));
            return g;
        }

        case LayerKind::maxpool2d: {
            const TensorT<S>& in = *cache.inputs[0];
            require(grad_out.numel() == cache.argmax.size(), "maxpool2d backward: grad size mismatch");
            TensorT<S> dx(in.shape);
            for (std::size_t i = 0; i < cache.argmax.size(); ++i)
                dx[static_cast<std::size_t>(cache.argmax[i])] += grad_out[i];
            g.inputs.push_back(std::move(dx));
            return g;
        }

        case LayerKind::dropout: {
            const TensorT<S>& in = *cache.inputs[0];
            require(grad_out.same_shape(in), "dropout backward: grad shape mismatch");
            if (!cache.train_mode) {
                g.inputs.push_back(grad_out);
                return g;
            }
            TensorT<S> dx(in.shape);
            for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] = grad_out[i] * cache.mask[i];
            g.inputs.push_back(std::move(dx));
            return g;
        }

        case LayerKind::dense: {
            const TensorT<S>& in = *cache.inputs[0];
            const int N = in.dim(0), Fin = in.dim(1), U = spec.units;
            require(grad_out.shape == std::vector<int>({N, U}),
                    "dense backward: grad shape " + shape_str(grad_out.shape));
            const TensorT<S>& weight = params[0];
            TensorT<S> dw(weight.shape), db({U}), dx(in.shape);
            CMapM<S> x(in.ptr(), N, Fin), w(weight.ptr(), Fin, U), go(grad_out.ptr(), N, U);
            MapM<S>(dw.ptr(), Fin, U).noalias() = x.transpose() * go;
            Eigen::Map<Eigen::RowVector<S, Eigen::Dynamic>>(db.ptr(), U) = go.colwise().sum();
            MapM<S>(dx.ptr(), N, Fin).noalias() = go * w.transpose();
            g.inputs.push_back(std::move(dx));
            g.params.push_back(std::move(dw));
            g.params.push_back(std::move(db));
            return g;
        }

        case LayerKind::concat: {
            const int N = cache.inputs[0]->dim(0);
            const int minH = cache.crop_h, minW = cache.crop_w;
            int Csum = 0;
            for (const TensorT<S>* t : cache.inputs) Csum += t->dim(3);
            require(grad_out.shape == std::vector<int>({N, minH, minW, Csum}),
                    "concat backward: grad shape " + shape_str(grad_out.shape));
            for (const TensorT<S>* t : cache.inputs) g.inputs.emplace_back(t->shape);
            for (int n = 0; n < N; ++n) {
                for (int y = 0; y < minH; ++y) {
                    for (int x = 0; x < minW; ++x) {
                        const S* src =
                            grad_out.ptr() + ((static_cast<std::int64_t>(n) * minH + y) * minW + x) * Csum;
                        for (std::size_t i = 0; i < cache.inputs.size(); ++i) {
                            const TensorT<S>* t = cache.inputs[i];
                            const int H = t->dim(1), W = t->dim(2), C = t->dim(3);
                            S* dst = g.inputs[i].ptr() + ((static_cast<std::int64_t>(n) * H + y) * W + x) * C;
                            std::copy(src, src + C, dst);
                            src += C;
                        }
                    }
                }
            }
            return g;
        }

        case LayerKind::flatten: {
            const TensorT<S>& in = *cache.inputs[0];
            require(grad_out.numel() == in.numel(), "flatten backward: grad size mismatch");
            g.inputs.push_back(grad_out.reshaped(in.shape));
            return g;
        }
    }
    throw std::logic_error("backward_layer: unknown kind");
}

} // namespace lcdn
