#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "setq/nn/params.hpp"
#include "setq/nn/rng.hpp"
#include "setq/nn/tensor.hpp"

namespace setq::nn {

enum class Activation { Relu, Linear };

// Fully connected layer, batch-first. y = act(x W^T + b).
// Forward caches input and pre-activations; backward accumulates into
// gw/gb (zero_grad clears) and returns the input gradient.
template <typename S>
struct Dense {
    int in = 0;
    int out = 0;
    Activation act = Activation::Relu;

    Tensor<S> w;   // [out x in]
    Tensor<S> b;   // [out]
    Tensor<S> gw;
    Tensor<S> gb;

    Tensor<S> cached_input;   // [batch x in]
    Tensor<S> cached_preact;  // [batch x out]
    bool has_cache = false;

    Dense() = default;

    Dense(int in_dim, int out_dim, Activation a)
        : in(in_dim), out(out_dim), act(a),
          w({out_dim, in_dim}), b({out_dim}),
          gw({out_dim, in_dim}), gb({out_dim}) {}

    // uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)]
    void init(Rng& rng) {
        double bound = std::sqrt(1.0 / in);
        for (auto& v : w.data) v = static_cast<S>(rng.uniform(-bound, bound));
        for (auto& v : b.data) v = static_cast<S>(rng.uniform(-bound, bound));
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.shape.size() != 2 || x.dim(1) != in) {
            throw std::invalid_argument("dense_forward: input " + x.shape_string() +
                                        " incompatible with weights " + w.shape_string());
        }
        const int batch = x.dim(0);
        Tensor<S> pre({batch, out});
        for (int r = 0; r < batch; ++r) {
            const S* xr = &x.data[static_cast<size_t>(r) * in];
            S* pr = &pre.data[static_cast<size_t>(r) * out];
            for (int o = 0; o < out; ++o) {
                double acc = static_cast<double>(b[static_cast<size_t>(o)]);
                const S* wr = &w.data[static_cast<size_t>(o) * in];
                for (int i = 0; i < in; ++i) acc += static_cast<double>(wr[i]) * static_cast<double>(xr[i]);
                pr[o] = static_cast<S>(acc);
            }
        }
        cached_input = x;
        cached_preact = pre;
        has_cache = true;
        if (act == Activation::Relu) {
            for (auto& v : pre.data)
                if (v < S(0)) v = S(0);
        }
        return pre;
    }

    // grad_out: [batch x out]; returns grad wrt input [batch x in].
    // ReLU derivative at exactly 0 is taken as 0.
    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!has_cache) throw std::logic_error("dense_backward: no cached forward state");
        if (grad_out.shape != cached_preact.shape) {
            throw std::invalid_argument("dense_backward: grad " + grad_out.shape_string() +
                                        " does not match cached output " + cached_preact.shape_string());
        }
        const int batch = grad_out.dim(0);
        Tensor<S> grad_in({batch, in});
        for (int r = 0; r < batch; ++r) {
            const S* go = &grad_out.data[static_cast<size_t>(r) * out];
            const S* pre = &cached_preact.data[static_cast<size_t>(r) * out];
            const S* xr = &cached_input.data[static_cast<size_t>(r) * in];
            S* gi = &grad_in.data[static_cast<size_t>(r) * in];
            for (int o = 0; o < out; ++o) {
                S g = go[o];
                if (act == Activation::Relu && pre[o] <= S(0)) g = S(0);
                if (g == S(0)) continue;
                gb[static_cast<size_t>(o)] += g;
                S* gwr = &gw.data[static_cast<size_t>(o) * in];
                const S* wr = &w.data[static_cast<size_t>(o) * in];
                for (int i = 0; i < in; ++i) {
                    gwr[i] += g * xr[i];
                    gi[i] += g * wr[i];
                }
            }
        }
        return grad_in;
    }

    void zero_grad() {
        gw.fill(S(0));
        gb.fill(S(0));
    }

    void register_params(ParameterSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", &w);
        ps.add(prefix + ".b", &b);
    }

    void register_grads(ParameterSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", &gw);
        ps.add(prefix + ".b", &gb);
    }
};

}  // namespace setq::nn
