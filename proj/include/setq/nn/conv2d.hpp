#pragma once

#include <stdexcept>

#include "setq/nn/params.hpp"
#include "setq/nn/rng.hpp"
#include "setq/nn/tensor.hpp"

namespace setq::nn {

// Strided 2-D cross-correlation with ReLU. Zero padding keeps the output
// spatial extent at ceil(in/stride): total pad = (out-1)*stride + k - in,
// split with the smaller half in front.
template <typename S>
struct Conv2d {
    int filters = 0, in_ch = 0, kh = 0, kw = 0, sh = 1, sw = 1;

    Tensor<S> k;  // [filters x in_ch x kh x kw]
    Tensor<S> b;  // [filters]
    Tensor<S> gk, gb;

    Tensor<S> cached_input;   // [batch x ch x H x W]
    Tensor<S> cached_preact;  // [batch x filters x H' x W']
    bool has_cache = false;

    Conv2d() = default;

    Conv2d(int filters_, int in_ch_, int kh_, int kw_, int sh_, int sw_)
        : filters(filters_), in_ch(in_ch_), kh(kh_), kw(kw_), sh(sh_), sw(sw_),
          k({filters_, in_ch_, kh_, kw_}), b({filters_}),
          gk({filters_, in_ch_, kh_, kw_}), gb({filters_}) {}

    void init(Rng& rng) {
        double bound = std::sqrt(1.0 / (in_ch * kh * kw));
        for (auto& v : k.data) v = static_cast<S>(rng.uniform(-bound, bound));
        for (auto& v : b.data) v = static_cast<S>(rng.uniform(-bound, bound));
    }

    static int out_size(int in, int stride) { return (in + stride - 1) / stride; }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.shape.size() != 4 || x.dim(1) != in_ch) {
            throw std::invalid_argument("conv2d_forward: input " + x.shape_string() +
                                        " incompatible with kernels " + k.shape_string());
        }
        const int batch = x.dim(0), H = x.dim(2), W = x.dim(3);
        const int Ho = out_size(H, sh), Wo = out_size(W, sw);
        const int pad_h = std::max(0, (Ho - 1) * sh + kh - H);
        const int pad_w = std::max(0, (Wo - 1) * sw + kw - W);
        if (kh > H + pad_h || kw > W + pad_w) {
            throw std::invalid_argument("conv2d_forward: kernel " + std::to_string(kh) + "x" +
                                        std::to_string(kw) + " larger than padded input");
        }
        const int ph0 = pad_h / 2, pw0 = pad_w / 2;

        Tensor<S> pre({batch, filters, Ho, Wo});
        for (int n = 0; n < batch; ++n) {
            for (int f = 0; f < filters; ++f) {
                for (int oh = 0; oh < Ho; ++oh) {
                    for (int ow = 0; ow < Wo; ++ow) {
                        double acc = static_cast<double>(b[static_cast<size_t>(f)]);
                        for (int c = 0; c < in_ch; ++c) {
                            for (int r = 0; r < kh; ++r) {
                                int ih = oh * sh + r - ph0;
                                if (ih < 0 || ih >= H) continue;
                                for (int q = 0; q < kw; ++q) {
                                    int iw = ow * sw + q - pw0;
                                    if (iw < 0 || iw >= W) continue;
                                    acc += static_cast<double>(kernel_at(f, c, r, q)) *
                                           static_cast<double>(input_at(x, n, c, ih, iw));
                                }
                            }
                        }
                        pre.data[out_index(pre, n, f, oh, ow)] = static_cast<S>(acc);
                    }
                }
            }
        }
        cached_input = x;
        cached_preact = pre;
        has_cache = true;
        Tensor<S> y = pre;
        for (auto& v : y.data)
            if (v < S(0)) v = S(0);
        return y;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!has_cache) throw std::logic_error("conv2d backward: no cached forward state");
        if (grad_out.shape != cached_preact.shape) {
            throw std::invalid_argument("conv2d backward: grad shape " + grad_out.shape_string() +
                                        " does not match output " + cached_preact.shape_string());
        }
        const Tensor<S>& x = cached_input;
        const int batch = x.dim(0), H = x.dim(2), W = x.dim(3);
        const int Ho = grad_out.dim(2), Wo = grad_out.dim(3);
        const int pad_h = std::max(0, (Ho - 1) * sh + kh - H);
        const int pad_w = std::max(0, (Wo - 1) * sw + kw - W);
        const int ph0 = pad_h / 2, pw0 = pad_w / 2;

        Tensor<S> grad_in(x.shape);
        for (int n = 0; n < batch; ++n) {
            for (int f = 0; f < filters; ++f) {
                for (int oh = 0; oh < Ho; ++oh) {
                    for (int ow = 0; ow < Wo; ++ow) {
                        size_t oi = out_index(cached_preact, n, f, oh, ow);
                        S g = grad_out.data[oi];
                        if (cached_preact.data[oi] <= S(0)) g = S(0);
                        if (g == S(0)) continue;
                        gb[static_cast<size_t>(f)] += g;
                        for (int c = 0; c < in_ch; ++c) {
                            for (int r = 0; r < kh; ++r) {
                                int ih = oh * sh + r - ph0;
                                if (ih < 0 || ih >= H) continue;
                                for (int q = 0; q < kw; ++q) {
                                    int iw = ow * sw + q - pw0;
                                    if (iw < 0 || iw >= W) continue;
                                    gk.data[kernel_index(f, c, r, q)] += g * input_at(x, n, c, ih, iw);
                                    grad_in.data[input_index(x, n, c, ih, iw)] += g * kernel_at(f, c, r, q);
                                }
                            }
                        }
                    }
                }
            }
        }
        return grad_in;
    }

    void zero_grad() {
        gk.fill(S(0));
        gb.fill(S(0));
    }

    void register_params(ParameterSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".k", &k);
        ps.add(prefix + ".b", &b);
    }

    void register_grads(ParameterSet<S>& ps, const std::string& prefix) {
        ps.add(prefix + ".k", &gk);
        ps.add(prefix + ".b", &gb);
    }

private:
    S kernel_at(int f, int c, int r, int q) const { return k.data[kernel_index(f, c, r, q)]; }

    size_t kernel_index(int f, int c, int r, int q) const {
        return ((static_cast<size_t>(f) * in_ch + c) * kh + r) * kw + q;
    }

    static S input_at(const Tensor<S>& x, int n, int c, int ih, int iw) {
        return x.data[input_index(x, n, c, ih, iw)];
    }

    static size_t input_index(const Tensor<S>& x, int n, int c, int ih, int iw) {
        return ((static_cast<size_t>(n) * x.dim(1) + c) * x.dim(2) + ih) * x.dim(3) + iw;
    }

    static size_t out_index(const Tensor<S>& t, int n, int f, int oh, int ow) {
        return ((static_cast<size_t>(n) * t.dim(1) + f) * t.dim(2) + oh) * t.dim(3) + ow;
    }
};

}  // namespace setq::nn
