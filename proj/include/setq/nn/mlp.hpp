#pragma once

#include <vector>

#include "setq/nn/dense.hpp"

namespace setq::nn {

// Stack of Dense layers: ReLU on every layer except an optional Linear tail.
template <typename S>
struct Mlp {
    std::vector<Dense<S>> layers;

    static Mlp dense_stack(int input_dim, const std::vector<int>& widths, bool linear_tail) {
        Mlp m;
        int in = input_dim;
        for (size_t i = 0; i < widths.size(); ++i) {
            bool last = (i + 1 == widths.size());
            Activation a = (last && linear_tail) ? Activation::Linear : Activation::Relu;
            m.layers.emplace_back(in, widths[i], a);
            in = widths[i];
        }
        return m;
    }

    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }

    void init(Rng& rng) {
        for (auto& l : layers) l.init(rng);
    }

    Tensor<S> forward(const Tensor<S>& x) {
        Tensor<S> h = x;
        for (auto& l : layers) h = l.forward(h);
        return h;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        Tensor<S> g = grad_out;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) g = it->backward(g);
        return g;
    }

    void zero_grad() {
        for (auto& l : layers) l.zero_grad();
    }

    void register_params(ParameterSet<S>& ps, const std::string& prefix) {
        for (size_t i = 0; i < layers.size(); ++i)
            layers[i].register_params(ps, prefix + std::to_string(i));
    }

    void register_grads(ParameterSet<S>& ps, const std::string& prefix) {
        for (size_t i = 0; i < layers.size(); ++i)
            layers[i].register_grads(ps, prefix + std::to_string(i));
    }
};

}  // namespace setq::nn
