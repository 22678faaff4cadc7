#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace setq::nn {

// Dense row-major tensor. Scalar is float in production networks and double
// inside finite-difference verification.
template <typename S>
struct Tensor {
    std::vector<int> shape;
    std::vector<S> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
        data.assign(element_count(shape), S(0));
    }

    Tensor(std::vector<int> shp, std::vector<S> values)
        : shape(std::move(shp)), data(std::move(values)) {
        if (element_count(shape) != data.size()) {
            throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_string(shape));
        }
    }

    static size_t element_count(const std::vector<int>& shp) {
        size_t n = 1;
        for (int d : shp) {
            if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_string(shp));
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return data.size(); }

    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    S& operator[](size_t i) { return data[i]; }
    S operator[](size_t i) const { return data[i]; }

    // 2-D accessors (most of the engine is matrices)
    S& at(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
    S at(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

    void fill(S v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    static std::string shape_string(const std::vector<int>& shp) {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shp.size(); ++i) os << (i ? "x" : "") << shp[i];
        os << "]";
        return os.str();
    }

    std::string shape_string() const { return shape_string(shape); }
};

template <typename S>
bool same_shape(const Tensor<S>& a, const Tensor<S>& b) {
    return a.shape == b.shape;
}

}  // namespace setq::nn
