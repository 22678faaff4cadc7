#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "setq/nn/tensor.hpp"

namespace setq::nn {

// Ordered view over the named tensors of a network. Non-owning: the network
// keeps the storage, the set keeps stable iteration order for the optimizer,
// soft updates and checkpoints.
template <typename S>
class ParameterSet {
public:
    struct Entry {
        std::string name;
        Tensor<S>* tensor;
    };

    void add(std::string name, Tensor<S>* t) {
        if (!names_.insert(name).second) {
            throw std::invalid_argument("duplicate parameter name: " + name);
        }
        entries_.push_back({std::move(name), t});
    }

    size_t size() const { return entries_.size(); }
    const Entry& operator[](size_t i) const { return entries_[i]; }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    size_t scalar_count() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.tensor->size();
        return n;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_set<std::string> names_;
};

template <typename S>
void check_aligned(const ParameterSet<S>& a, const ParameterSet<S>& b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": parameter counts differ (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name) {
            throw std::invalid_argument(std::string(what) + ": name mismatch at index " +
                                        std::to_string(i) + " (" + a[i].name + " vs " + b[i].name + ")");
        }
        if (a[i].tensor->shape != b[i].tensor->shape) {
            throw std::invalid_argument(std::string(what) + ": shape mismatch for " + a[i].name +
                                        " (" + a[i].tensor->shape_string() + " vs " +
                                        b[i].tensor->shape_string() + ")");
        }
    }
}

// theta_target <- tau * theta_online + (1 - tau) * theta_target
template <typename S>
void soft_update(const ParameterSet<S>& target, const ParameterSet<S>& online, double tau) {
    if (tau < 0.0 || tau > 1.0) {
        throw std::invalid_argument("soft_update: tau must be in [0,1], got " + std::to_string(tau));
    }
    check_aligned(target, online, "soft_update");
    for (size_t i = 0; i < target.size(); ++i) {
        auto& t = target[i].tensor->data;
        const auto& o = online[i].tensor->data;
        for (size_t j = 0; j < t.size(); ++j) {
            t[j] = static_cast<S>(tau * static_cast<double>(o[j]) +
                                  (1.0 - tau) * static_cast<double>(t[j]));
        }
    }
}

// Copies values between two aligned parameter sets, possibly across scalar
// types (float nets are verified through exact casts into double nets).
template <typename D, typename T>
void copy_params(const ParameterSet<D>& dst, const ParameterSet<T>& src) {
    if (dst.size() != src.size()) {
        throw std::invalid_argument("copy_params: parameter counts differ");
    }
    for (size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].name != src[i].name || dst[i].tensor->shape != src[i].tensor->shape) {
            throw std::invalid_argument("copy_params: mismatch at " + dst[i].name);
        }
        auto& d = dst[i].tensor->data;
        const auto& s = src[i].tensor->data;
        for (size_t j = 0; j < d.size(); ++j) d[j] = static_cast<D>(s[j]);
    }
}

}  // namespace setq::nn
