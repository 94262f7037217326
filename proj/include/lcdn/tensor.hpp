#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcdn {

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major tensor. Rank and sizes live in `shape`; data.size() always
// equals the shape product.
template <class S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> shp) : shape(std::move(shp)), data(numel_of(shape), S(0)) {}
    TensorT(std::vector<int> shp, std::vector<S> values) : shape(std::move(shp)), data(std::move(values)) {
        if (data.size() != numel_of(shape))
            throw std::invalid_argument("tensor: " + std::to_string(data.size()) +
                                        " values for shape " + shape_str(shape));
    }

    static std::size_t numel_of(const std::vector<int>& shp) {
        std::size_t n = 1;
        for (int d : shp) {
            if (d <= 0) throw std::invalid_argument("tensor: nonpositive dim in " + shape_str(shp));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }

    S& operator[](std::size_t i) { return data[i]; }
    const S& operator[](std::size_t i) const { return data[i]; }

    TensorT reshaped(std::vector<int> shp) const {
        if (numel_of(shp) != data.size())
            throw std::invalid_argument("tensor: cannot reshape " + shape_str(shape) + " to " + shape_str(shp));
        TensorT out;
        out.shape = std::move(shp);
        out.data = data;
        return out;
    }

    void fill(S v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    friend bool operator==(const TensorT& a, const TensorT& b) {
        return a.shape == b.shape && a.data == b.data;
    }
};

using Tensor = TensorT<float>;

} // namespace lcdn
