#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "setq/nn/params.hpp"
#include "setq/nn/rng.hpp"
#include "setq/nn/tensor.hpp"

namespace setq::nn {

template <typename S>
inline S sigmoid(S x) {
    return static_cast<S>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
}

// Single LSTM cell. Gate rows in wx/wh/b are ordered (input, forget,
// candidate, output), each block of `hidden` rows.
//
//   i = sig(Wi x + Ui h + bi)      f = sig(Wf x + Uf h + bf)
//   g = tanh(Wg x + Ug h + bg)     o = sig(Wo x + Uo h + bo)
//   c' = f*c + i*g                 h' = o * tanh(c')
template <typename S>
struct LstmCell {
    int in = 0;
    int hidden = 0;

    Tensor<S> wx;  // [4h x in]
    Tensor<S> wh;  // [4h x h]
    Tensor<S> b;   // [4h]
    Tensor<S> gwx, gwh, gb;

    struct Cache {
        std::vector<S> x, h_prev, c_prev;
        std::vector<S> i, f, g, o;  // post-nonlinearity gate values
        std::vector<S> c_new, tanh_c_new;
    };

    struct StateGrad {
        std::vector<S> gx, gh_prev, gc_prev;
    };

    LstmCell() = default;

    LstmCell(int in_dim, int hidden_dim)
        : in(in_dim), hidden(hidden_dim),
          wx({4 * hidden_dim, in_dim}), wh({4 * hidden_dim, hidden_dim}), b({4 * hidden_dim}),
          gwx({4 * hidden_dim, in_dim}), gwh({4 * hidden_dim, hidden_dim}), gb({4 * hidden_dim}) {}

    void init(Rng& rng) {
        double bx = std::sqrt(1.0 / in);
        double bh = std::sqrt(1.0 / hidden);
        for (auto& v : wx.data) v = static_cast<S>(rng.uniform(-bx, bx));
        for (auto& v : wh.data) v = static_cast<S>(rng.uniform(-bh, bh));
        for (auto& v : b.data) v = static_cast<S>(rng.uniform(-bh, bh));
    }

    std::pair<std::vector<S>, std::vector<S>> step(const std::vector<S>& x,
                                                   const std::vector<S>& h_prev,
                                                   const std::vector<S>& c_prev,
                                                   Cache* cache = nullptr) const {
        if (static_cast<int>(x.size()) != in || static_cast<int>(h_prev.size()) != hidden ||
            static_cast<int>(c_prev.size()) != hidden) {
            throw std::invalid_argument("lstm_step: state sizes do not match cell dims (in=" +
                                        std::to_string(in) + ", hidden=" + std::to_string(hidden) + ")");
        }
        std::vector<S> pre(static_cast<size_t>(4 * hidden));
        for (int r = 0; r < 4 * hidden; ++r) {
            double acc = static_cast<double>(b[static_cast<size_t>(r)]);
            const S* wxr = &wx.data[static_cast<size_t>(r) * in];
            for (int k = 0; k < in; ++k) acc += static_cast<double>(wxr[k]) * static_cast<double>(x[static_cast<size_t>(k)]);
            const S* whr = &wh.data[static_cast<size_t>(r) * hidden];
            for (int k = 0; k < hidden; ++k) acc += static_cast<double>(whr[k]) * static_cast<double>(h_prev[static_cast<size_t>(k)]);
            pre[static_cast<size_t>(r)] = static_cast<S>(acc);
        }
        std::vector<S> gi(hidden), gf(hidden), gg(hidden), go(hidden);
        std::vector<S> c_new(hidden), h_new(hidden), tanh_c(hidden);
        for (int k = 0; k < hidden; ++k) {
            gi[k] = sigmoid(pre[static_cast<size_t>(k)]);
            gf[k] = sigmoid(pre[static_cast<size_t>(hidden + k)]);
            gg[k] = static_cast<S>(std::tanh(static_cast<double>(pre[static_cast<size_t>(2 * hidden + k)])));
            go[k] = sigmoid(pre[static_cast<size_t>(3 * hidden + k)]);
            c_new[k] = gf[k] * c_prev[static_cast<size_t>(k)] + gi[k] * gg[k];
            tanh_c[k] = static_cast<S>(std::tanh(static_cast<double>(c_new[k])));
            h_new[k] = go[k] * tanh_c[k];
        }
        if (cache) {
            cache->x = x;
            cache->h_prev = h_prev;
            cache->c_prev = c_prev;
            cache->i = gi;
            cache->f = gf;
            cache->g = gg;
            cache->o = go;
            cache->c_new = c_new;
            cache->tanh_c_new = tanh_c;
        }
        return {h_new, c_new};
    }

    // Accumulates weight grads; returns grads wrt x, h_prev, c_prev.
    StateGrad backward(const Cache& cc, const std::vector<S>& gh, const std::vector<S>& gc_in) {
        std::vector<S> pre_grad(static_cast<size_t>(4 * hidden));
        StateGrad out;
        out.gx.assign(static_cast<size_t>(in), S(0));
        out.gh_prev.assign(static_cast<size_t>(hidden), S(0));
        out.gc_prev.assign(static_cast<size_t>(hidden), S(0));
        for (int k = 0; k < hidden; ++k) {
            S gc = gc_in[static_cast<size_t>(k)] +
                   gh[static_cast<size_t>(k)] * cc.o[static_cast<size_t>(k)] *
                       (S(1) - cc.tanh_c_new[static_cast<size_t>(k)] * cc.tanh_c_new[static_cast<size_t>(k)]);
            S gi = gc * cc.g[static_cast<size_t>(k)];
            S gf = gc * cc.c_prev[static_cast<size_t>(k)];
            S gg = gc * cc.i[static_cast<size_t>(k)];
            S go = gh[static_cast<size_t>(k)] * cc.tanh_c_new[static_cast<size_t>(k)];
            pre_grad[static_cast<size_t>(k)] = gi * cc.i[static_cast<size_t>(k)] * (S(1) - cc.i[static_cast<size_t>(k)]);
            pre_grad[static_cast<size_t>(hidden + k)] = gf * cc.f[static_cast<size_t>(k)] * (S(1) - cc.f[static_cast<size_t>(k)]);
            pre_grad[static_cast<size_t>(2 * hidden + k)] = gg * (S(1) - cc.g[static_cast<size_t>(k)] * cc.g[static_cast<size_t>(k)]);
            pre_grad[static_cast<size_t>(3 * hidden + k)] = go * cc.o[static_cast<size_t>(k)] * (S(1) - cc.o[static_cast<size_t>(k)]);
            out.gc_prev[static_cast<size_t>(k)] = gc * cc.f[static_cast<size_t>(k)];
        }
        for (int r = 0; r < 4 * hidden; ++r) {
            S pg = pre_grad[static_cast<size_t>(r)];
            if (pg == S(0)) continue;
            gb[static_cast<size_t>(r)] += pg;
            S* gwxr = &gwx.data[static_cast<size_t>(r) * in];
            const S* wxr = &wx.data[static_cast<size_t>(r) * in];
            for (int k = 0; k < in; ++k) {
                gwxr[k] += pg * cc.x[static_cast<size_t>(k)];
                out.gx[static_cast<size_t>(k)] += pg * wxr[k];
            }
            S* gwhr = &gwh.data[static_cast<size_t>(r) * hidden];
            const S* whr = &wh.data[static_cast<size_t>(r) * hidden];
            for (int k = 0; k < hidden; ++k) {
                gwhr[k] += pg * cc.h_prev[static_cast<size_t>(k)];
                out.gh_prev[static_cast<size_t>(k)] += pg * whr[k];
            }
        }
        return out;
    }

    void zero_grad() {
        gwx.fill(S(0));
        gwh.fill(S(0));
        gb.fill(S(0));
    }

    void register_params(ParameterSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".wx", &wx);
        ps.add(prefix + ".wh", &wh);
        ps.add(prefix + ".b", &b);
    }

    void register_grads(ParameterSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".wx", &gwx);
        ps.add(prefix + ".wh", &gwh);
        ps.add(prefix + ".b", &gb);
    }
};

}  // namespace setq::nn
