#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "setq/nn/params.hpp"

namespace setq::nn {

// Bias-corrected Adam. Moments are allocated on first use and stay aligned
// with the parameter set by name and shape.
template <typename S>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t t = 0;

    std::vector<std::string> names;
    std::vector<Tensor<S>> m;
    std::vector<Tensor<S>> v;

    AdamState() = default;
    explicit AdamState(double learning_rate) : lr(learning_rate) {}

    void ensure_initialized(const ParameterSet<S>& params) {
        if (!m.empty()) return;
        for (const auto& e : params) {
            names.push_back(e.name);
            m.emplace_back(e.tensor->shape);
            v.emplace_back(e.tensor->shape);
        }
    }
};

template <typename S>
void adam_step(const ParameterSet<S>& params, const ParameterSet<S>& grads, AdamState<S>& st) {
    check_aligned(params, grads, "adam_step");
    st.ensure_initialized(params);
    if (st.names.size() != params.size()) {
        throw std::invalid_argument("adam_step: state tracks a different parameter set");
    }
    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (size_t i = 0; i < params.size(); ++i) {
        if (st.names[i] != params[i].name || st.m[i].shape != params[i].tensor->shape) {
            throw std::invalid_argument("adam_step: moment mismatch for " + params[i].name);
        }
        auto& p = params[i].tensor->data;
        const auto& g = grads[i].tensor->data;
        auto& m = st.m[i].data;
        auto& v = st.v[i].data;
        for (size_t j = 0; j < p.size(); ++j) {
            double gj = static_cast<double>(g[j]);
            double mj = st.beta1 * static_cast<double>(m[j]) + (1.0 - st.beta1) * gj;
            double vj = st.beta2 * static_cast<double>(v[j]) + (1.0 - st.beta2) * gj * gj;
            m[j] = static_cast<S>(mj);
            v[j] = static_cast<S>(vj);
            double update = st.lr * (mj / bc1) / (std::sqrt(vj / bc2) + st.eps);
            p[j] = static_cast<S>(static_cast<double>(p[j]) - update);
        }
    }
}

}  // namespace setq::nn
