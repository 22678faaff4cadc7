#pragma once

#include <cmath>
#include <vector>

#include "setq/enc/deep_set.hpp"
#include "setq/enc/features.hpp"
#include "setq/nn/dense.hpp"
#include "setq/nn/lstm.hpp"

namespace setq::enc {

// Recurrent set pooling: an LSTM evolves a query over K iterations, each
// iteration attends over the raw set elements and concatenates the readout
// back onto the query.
//
//   q_k      = LSTM(q*_{k-1})          q*_0 = 0, LSTM state reset per call
//   e_{j,k}  = x_j . (P q_k)           P projects the query onto feature space
//   alpha_k  = softmax(e_k)
//   beta_k   = sum_j alpha_{j,k} x_j
//   q*_k     = [q_k, beta_k]
//
// The encoder output is a dense readout of q*_K. For the empty set the LSTM
// is skipped and q*_K is the zero vector. Elements are processed in
// canonical order with 64-bit sums, so the output is bit-identical under
// input permutations.
template <typename S>
struct Set2SetEncoder {
    static constexpr int kFeatDim = 3;

    std::vector<nn::LstmCell<S>> cells;  // stacked; input dim hidden+3 at layer 0
    nn::Tensor<S> attn_proj;             // [3 x hidden]
    nn::Tensor<S> g_attn_proj;
    nn::Dense<S> readout;
    int hidden = 6;
    int iterations = 5;

    struct Trace {
        std::vector<double> last_alpha;
        std::vector<double> last_beta;
    };

    struct IterCache {
        std::vector<typename nn::LstmCell<S>::Cache> lstm;
        std::vector<S> q;      // query after the stack
        std::vector<S> s;      // projected query, feature space
        std::vector<double> alpha;
    };

    std::vector<IterCache> iter_cache_;
    nn::Tensor<S> cached_x_;  // [n x 3] canonical order
    int cached_n_ = 0;

    Set2SetEncoder() = default;

    Set2SetEncoder(int hidden_dim, int lstm_layers, int iter_count, int readout_dim)
        : attn_proj({kFeatDim, hidden_dim}), g_attn_proj({kFeatDim, hidden_dim}),
          readout(hidden_dim + kFeatDim, readout_dim, nn::Activation::Relu),
          hidden(hidden_dim), iterations(iter_count) {
        int in = hidden_dim + kFeatDim;
        for (int l = 0; l < lstm_layers; ++l) {
            cells.emplace_back(in, hidden_dim);
            in = hidden_dim;
        }
    }

    int output_dim() const { return readout.out; }

    void init(nn::Rng& rng) {
        for (auto& c : cells) c.init(rng);
        double bound = std::sqrt(1.0 / hidden);
        for (auto& v : attn_proj.data) v = static_cast<S>(rng.uniform(-bound, bound));
        readout.init(rng);
    }

    std::vector<S> forward(const DynamicSet& set, Trace* trace = nullptr) {
        const int n = static_cast<int>(set.size());
        cached_n_ = n;
        std::vector<S> qstar(static_cast<size_t>(hidden + kFeatDim), S(0));
        iter_cache_.clear();
        if (n > 0) {
            auto order = DeepSetEncoder<S>::canonical_order(set);
            cached_x_ = nn::Tensor<S>({n, kFeatDim});
            for (int r = 0; r < n; ++r) {
                const auto& f = set[order[static_cast<size_t>(r)]];
                cached_x_.at(r, 0) = static_cast<S>(f.dr);
                cached_x_.at(r, 1) = static_cast<S>(f.dv);
                cached_x_.at(r, 2) = static_cast<S>(f.dl);
            }
            std::vector<std::vector<S>> h(cells.size(), std::vector<S>(static_cast<size_t>(hidden), S(0)));
            std::vector<std::vector<S>> c = h;
            iter_cache_.resize(static_cast<size_t>(iterations));
            for (int k = 0; k < iterations; ++k) {
                IterCache& ic = iter_cache_[static_cast<size_t>(k)];
                ic.lstm.resize(cells.size());
                std::vector<S> in = qstar;
                for (size_t l = 0; l < cells.size(); ++l) {
                    auto [hn, cn] = cells[l].step(in, h[l], c[l], &ic.lstm[l]);
                    h[l] = std::move(hn);
                    c[l] = std::move(cn);
                    in = h[l];
                }
                ic.q = h.back();
                ic.s.assign(static_cast<size_t>(kFeatDim), S(0));
                for (int d = 0; d < kFeatDim; ++d) {
                    double acc = 0.0;
                    for (int m = 0; m < hidden; ++m)
                        acc += static_cast<double>(attn_proj.at(d, m)) * static_cast<double>(ic.q[static_cast<size_t>(m)]);
                    ic.s[static_cast<size_t>(d)] = static_cast<S>(acc);
                }
                std::vector<double> e(static_cast<size_t>(n));
                double e_max = -1e300;
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int d = 0; d < kFeatDim; ++d)
                        acc += static_cast<double>(cached_x_.at(j, d)) * static_cast<double>(ic.s[static_cast<size_t>(d)]);
                    e[static_cast<size_t>(j)] = acc;
                    e_max = std::max(e_max, acc);
                }
                double z = 0.0;
                ic.alpha.resize(static_cast<size_t>(n));
                for (int j = 0; j < n; ++j) {
                    ic.alpha[static_cast<size_t>(j)] = std::exp(e[static_cast<size_t>(j)] - e_max);
                    z += ic.alpha[static_cast<size_t>(j)];
                }
                for (auto& a : ic.alpha) a /= z;
                std::vector<double> beta(static_cast<size_t>(kFeatDim), 0.0);
                for (int j = 0; j < n; ++j)
                    for (int d = 0; d < kFeatDim; ++d)
                        beta[static_cast<size_t>(d)] += ic.alpha[static_cast<size_t>(j)] * static_cast<double>(cached_x_.at(j, d));
                for (int m = 0; m < hidden; ++m) qstar[static_cast<size_t>(m)] = ic.q[static_cast<size_t>(m)];
                for (int d = 0; d < kFeatDim; ++d) qstar[static_cast<size_t>(hidden + d)] = static_cast<S>(beta[static_cast<size_t>(d)]);
                if (trace && k + 1 == iterations) {
                    trace->last_alpha = ic.alpha;
                    trace->last_beta = beta;
                }
            }
        }
        nn::Tensor<S> q({1, hidden + kFeatDim}, qstar);
        return readout.forward(q).data;
    }

    void backward(const std::vector<S>& grad_out) {
        nn::Tensor<S> g({1, readout.out}, grad_out);
        nn::Tensor<S> gq_tensor = readout.backward(g);
        if (cached_n_ == 0) return;

        std::vector<S> g_qstar(gq_tensor.data);
        const size_t layers = cells.size();
        std::vector<std::vector<S>> gh(layers, std::vector<S>(static_cast<size_t>(hidden), S(0)));
        std::vector<std::vector<S>> gc = gh;

        for (int k = iterations - 1; k >= 0; --k) {
            IterCache& ic = iter_cache_[static_cast<size_t>(k)];
            std::vector<S> gq(g_qstar.begin(), g_qstar.begin() + hidden);
            std::vector<S> gbeta(g_qstar.begin() + hidden, g_qstar.end());

            // attention backward: beta -> alpha -> e -> s -> (P, q)
            const int n = cached_n_;
            std::vector<double> galpha(static_cast<size_t>(n), 0.0);
            for (int j = 0; j < n; ++j)
                for (int d = 0; d < kFeatDim; ++d)
                    galpha[static_cast<size_t>(j)] +=
                        static_cast<double>(gbeta[static_cast<size_t>(d)]) * static_cast<double>(cached_x_.at(j, d));
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += ic.alpha[static_cast<size_t>(j)] * galpha[static_cast<size_t>(j)];
            std::vector<double> gs(static_cast<size_t>(kFeatDim), 0.0);
            for (int j = 0; j < n; ++j) {
                double ge = ic.alpha[static_cast<size_t>(j)] * (galpha[static_cast<size_t>(j)] - dot);
                for (int d = 0; d < kFeatDim; ++d)
                    gs[static_cast<size_t>(d)] += ge * static_cast<double>(cached_x_.at(j, d));
            }
            for (int d = 0; d < kFeatDim; ++d) {
                for (int m = 0; m < hidden; ++m) {
                    g_attn_proj.at(d, m) += static_cast<S>(gs[static_cast<size_t>(d)] * static_cast<double>(ic.q[static_cast<size_t>(m)]));
                    gq[static_cast<size_t>(m)] += static_cast<S>(gs[static_cast<size_t>(d)] * static_cast<double>(attn_proj.at(d, m)));
                }
            }

            // LSTM stack backward through iteration k
            for (size_t m = 0; m < static_cast<size_t>(hidden); ++m) gh[layers - 1][m] += gq[m];
            std::vector<S> gx_below;
            for (size_t l = layers; l-- > 0;) {
                auto sg = cells[l].backward(ic.lstm[l], gh[l], gc[l]);
                gh[l] = std::move(sg.gh_prev);
                gc[l] = std::move(sg.gc_prev);
                if (l > 0) {
                    for (size_t m = 0; m < static_cast<size_t>(hidden); ++m) gh[l - 1][m] += sg.gx[m];
                } else {
                    gx_below = std::move(sg.gx);
                }
            }
            g_qstar = std::move(gx_below);  // grad wrt q*_{k-1}
        }
    }

    void zero_grad() {
        for (auto& c : cells) c.zero_grad();
        g_attn_proj.fill(S(0));
        readout.zero_grad();
    }

    void register_params(nn::ParameterSet<S>& ps, const std::string& prefix) {
        for (size_t l = 0; l < cells.size(); ++l)
            cells[l].register_params(ps, prefix + "lstm" + std::to_string(l));
        ps.add(prefix + "attn.p", &attn_proj);
        readout.register_params(ps, prefix + "readout");
    }

    void register_grads(nn::ParameterSet<S>& ps, const std::string& prefix) {
        for (size_t l = 0; l < cells.size(); ++l)
            cells[l].register_grads(ps, prefix + "lstm" + std::to_string(l));
        ps.add(prefix + "attn.p", &g_attn_proj);
        readout.register_grads(ps, prefix + "readout");
    }
};

}  // namespace setq::enc
