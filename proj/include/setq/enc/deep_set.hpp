#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "setq/enc/features.hpp"
#include "setq/nn/mlp.hpp"

namespace setq::enc {

enum class Pooling { Sum, Max };

// rho(pool_j phi(x_j)) over a variable-size set. Elements are re-ordered
// canonically before the pooled sum runs in 64-bit accumulators, so the
// output is bit-identical under any input permutation. An empty set pools
// to the zero vector.
template <typename S>
struct DeepSetEncoder {
    nn::Mlp<S> phi;
    nn::Mlp<S> rho;
    Pooling pooling = Pooling::Sum;

    int cached_n = 0;
    std::vector<int> cached_argmax;  // per output dim, for max pooling

    DeepSetEncoder() = default;

    DeepSetEncoder(int feat_dim, const std::vector<int>& phi_widths, const std::vector<int>& rho_widths,
                   Pooling pool = Pooling::Sum)
        : phi(nn::Mlp<S>::dense_stack(feat_dim, phi_widths, false)),
          rho(nn::Mlp<S>::dense_stack(phi_widths.back(), rho_widths, false)),
          pooling(pool) {}

    int output_dim() const { return rho.output_dim(); }

    void init(nn::Rng& rng) {
        phi.init(rng);
        rho.init(rng);
    }

    static std::vector<size_t> canonical_order(const DynamicSet& set) {
        std::vector<size_t> idx(set.size());
        std::iota(idx.begin(), idx.end(), size_t{0});
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            const auto &fa = set[a], &fb = set[b];
            if (fa.dl != fb.dl) return fa.dl < fb.dl;
            if (fa.dr != fb.dr) return fa.dr < fb.dr;
            return fa.dv < fb.dv;
        });
        return idx;
    }

    std::vector<S> forward(const DynamicSet& set) {
        const int n = static_cast<int>(set.size());
        const int pd = phi.output_dim();
        cached_n = n;
        nn::Tensor<S> pooled({1, pd});
        if (n > 0) {
            auto order = canonical_order(set);
            nn::Tensor<S> x({n, 3});
            for (int r = 0; r < n; ++r) {
                const auto& f = set[order[static_cast<size_t>(r)]];
                x.at(r, 0) = static_cast<S>(f.dr);
                x.at(r, 1) = static_cast<S>(f.dv);
                x.at(r, 2) = static_cast<S>(f.dl);
            }
            nn::Tensor<S> h = phi.forward(x);
            if (pooling == Pooling::Sum) {
                for (int d = 0; d < pd; ++d) {
                    double acc = 0.0;
                    for (int r = 0; r < n; ++r) acc += static_cast<double>(h.at(r, d));
                    pooled[static_cast<size_t>(d)] = static_cast<S>(acc);
                }
            } else {
                cached_argmax.assign(static_cast<size_t>(pd), 0);
                for (int d = 0; d < pd; ++d) {
                    S best = h.at(0, d);
                    int arg = 0;
                    for (int r = 1; r < n; ++r) {
                        if (h.at(r, d) > best) {
                            best = h.at(r, d);
                            arg = r;
                        }
                    }
                    pooled[static_cast<size_t>(d)] = best;
                    cached_argmax[static_cast<size_t>(d)] = arg;
                }
            }
        }
        nn::Tensor<S> z = rho.forward(pooled);
        return z.data;
    }

    void backward(const std::vector<S>& grad_out) {
        nn::Tensor<S> g({1, rho.output_dim()}, grad_out);
        nn::Tensor<S> gp = rho.backward(g);
        if (cached_n == 0) return;
        const int pd = phi.output_dim();
        nn::Tensor<S> gh({cached_n, pd});
        if (pooling == Pooling::Sum) {
            for (int r = 0; r < cached_n; ++r)
                for (int d = 0; d < pd; ++d) gh.at(r, d) = gp[static_cast<size_t>(d)];
        } else {
            for (int d = 0; d < pd; ++d)
                gh.at(cached_argmax[static_cast<size_t>(d)], d) = gp[static_cast<size_t>(d)];
        }
        phi.backward(gh);
    }

    void zero_grad() {
        phi.zero_grad();
        rho.zero_grad();
    }

    void register_params(nn::ParameterSet<S>& ps, const std::string& prefix) {
        phi.register_params(ps, prefix + "phi.");
        rho.register_params(ps, prefix + "rho.");
    }

    void register_grads(nn::ParameterSet<S>& ps, const std::string& prefix) {
        phi.register_grads(ps, prefix + "phi.");
        rho.register_grads(ps, prefix + "rho.");
    }
};

}  // namespace setq::enc
