#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "setq/enc/deep_set.hpp"
#include "setq/enc/features.hpp"
#include "setq/nn/adam.hpp"
#include "setq/nn/mlp.hpp"
#include "setq/sim/highway.hpp"

namespace setq::rl {

struct PpoConfig {
    double gamma = 0.9;
    double clip = 0.2;
    double lr = 5e-4;
    int batch = 64;
    int epochs = 4;            // passes over each rollout
    int horizon = 20;          // Monte Carlo return horizon
    int episodes_per_iter = 8;
    double value_coef = 1.0;
};

struct EnvObs {
    enc::DynamicSet set;
    enc::StaticFeature stat;
};

// Minimal on-policy environment surface; the highway simulator and the toy
// test environments both implement it.
class Env {
public:
    virtual ~Env() = default;
    virtual EnvObs reset(uint64_t seed) = 0;
    virtual std::pair<EnvObs, double> step(Action a) = 0;
    virtual int episode_length() const = 0;
};

struct RolloutStep {
    EnvObs obs;
    Action action = Action::Keep;
    double logp_old = 0.0;  // recorded at collection time, immutable
    double reward = 0.0;
    double mc_return = 0.0;
    double advantage = 0.0;
};

struct RolloutBuffer {
    std::vector<RolloutStep> steps;
    std::vector<size_t> episode_starts;
};

// Deep Set encoder shared between the policy head (3-way softmax) and the
// value head (scalar).
template <typename S>
struct PolicyValueNet {
    enc::DeepSetEncoder<S> encoder;
    nn::Mlp<S> pi_head;
    nn::Mlp<S> v_head;

    PolicyValueNet() = default;

    PolicyValueNet(const std::vector<int>& phi, const std::vector<int>& rho,
                   const std::vector<int>& head, uint64_t seed)
        : encoder(3, phi, rho) {
        std::vector<int> pi_dims = head, v_dims = head;
        pi_dims.push_back(3);
        v_dims.push_back(1);
        pi_head = nn::Mlp<S>::dense_stack(encoder.output_dim() + 3, pi_dims, true);
        v_head = nn::Mlp<S>::dense_stack(encoder.output_dim() + 3, v_dims, true);
        nn::Rng rng(nn::mix_seed(seed, 0x99c));
        encoder.init(rng);
        pi_head.init(rng);
        v_head.init(rng);
    }

    nn::Tensor<S> trunk_input(const EnvObs& obs) {
        auto feat = encoder.forward(obs.set);
        nn::Tensor<S> in({1, static_cast<int>(feat.size()) + 3});
        for (size_t i = 0; i < feat.size(); ++i) in[i] = feat[i];
        in[feat.size() + 0] = static_cast<S>(obs.stat.speed_frac);
        in[feat.size() + 1] = static_cast<S>(obs.stat.left_available);
        in[feat.size() + 2] = static_cast<S>(obs.stat.right_available);
        return in;
    }

    std::vector<double> action_probs(const EnvObs& obs) {
        auto in = trunk_input(obs);
        auto logits = pi_head.forward(in);
        return softmax(logits.data);
    }

    double value(const EnvObs& obs) {
        auto in = trunk_input(obs);
        return static_cast<double>(v_head.forward(in)[0]);
    }

    static std::vector<double> softmax(const std::vector<S>& logits) {
        double mx = -1e300;
        for (S v : logits) mx = std::max(mx, static_cast<double>(v));
        std::vector<double> p(logits.size());
        double z = 0.0;
        for (size_t i = 0; i < p.size(); ++i) {
            p[i] = std::exp(static_cast<double>(logits[i]) - mx);
            z += p[i];
        }
        for (auto& v : p) v /= z;
        return p;
    }

    void zero_grad() {
        encoder.zero_grad();
        pi_head.zero_grad();
        v_head.zero_grad();
    }

    nn::ParameterSet<S> params() {
        nn::ParameterSet<S> ps;
        encoder.register_params(ps, "enc.");
        pi_head.register_params(ps, "pi.");
        v_head.register_params(ps, "v.");
        return ps;
    }

    nn::ParameterSet<S> grads() {
        nn::ParameterSet<S> ps;
        encoder.register_grads(ps, "enc.");
        pi_head.register_grads(ps, "pi.");
        v_head.register_grads(ps, "v.");
        return ps;
    }
};

// One surrogate term: min(R*adv, clip(R, 1-eps, 1+eps)*adv) with
// R = exp(logp_new - logp_old). dlogp is the derivative of the term with
// respect to logp_new; it vanishes exactly when the clipped branch is
// active.
struct SurrogateTerm {
    double value = 0.0;
    double dlogp = 0.0;
    bool clipped = false;
};

inline SurrogateTerm clipped_surrogate(double logp_new, double logp_old, double adv, double eps) {
    SurrogateTerm t;
    double ratio = std::exp(logp_new - logp_old);
    double unclipped = ratio * adv;
    double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    if (unclipped <= clipped) {
        t.value = unclipped;
        t.dlogp = unclipped;  // d(R*adv)/dlogp_new = R*adv
    } else {
        t.value = clipped;
        t.dlogp = 0.0;
        t.clipped = true;
    }
    return t;
}

// Actions sampled from the softmax; log-probs recorded under the collecting
// policy. episodes == 0 gives an empty buffer.
template <typename S>
RolloutBuffer collect_rollout(PolicyValueNet<S>& policy, Env& env, int episodes, uint64_t seed) {
    RolloutBuffer buf;
    nn::Rng rng(nn::mix_seed(seed, 0xac7));
    for (int ep = 0; ep < episodes; ++ep) {
        EnvObs obs = env.reset(nn::mix_seed(seed, 0xe9, static_cast<uint64_t>(ep)));
        buf.episode_starts.push_back(buf.steps.size());
        const int len = env.episode_length();
        for (int t = 0; t < len; ++t) {
            auto probs = policy.action_probs(obs);
            double u = rng.uniform();
            size_t a = 0;
            double acc = 0.0;
            for (size_t i = 0; i < probs.size(); ++i) {
                acc += probs[i];
                if (u < acc) {
                    a = i;
                    break;
                }
                a = i;
            }
            RolloutStep st;
            st.obs = obs;
            st.action = static_cast<Action>(a);
            st.logp_old = std::log(std::max(probs[a], 1e-300));
            auto [next, r] = env.step(st.action);
            st.reward = r;
            buf.steps.push_back(std::move(st));
            obs = std::move(next);
        }
    }
    return buf;
}

// Truncated Monte Carlo returns: each episode is cut into horizon-length
// segments and G_t sums discounted rewards to the segment end.
inline void compute_returns(RolloutBuffer& buf, double gamma, int horizon) {
    for (size_t e = 0; e < buf.episode_starts.size(); ++e) {
        size_t start = buf.episode_starts[e];
        size_t end = (e + 1 < buf.episode_starts.size()) ? buf.episode_starts[e + 1] : buf.steps.size();
        for (size_t seg = start; seg < end; seg += static_cast<size_t>(horizon)) {
            size_t seg_end = std::min(seg + static_cast<size_t>(horizon), end);
            double g = 0.0;
            for (size_t t = seg_end; t-- > seg;) {
                g = buf.steps[t].reward + gamma * g;
                buf.steps[t].mc_return = g;
            }
        }
    }
}

// A_t = G_t - V(s_t), then normalized to zero mean / unit variance over the
// update batch.
template <typename S>
void compute_advantages(RolloutBuffer& buf, PolicyValueNet<S>& net, bool normalize = true) {
    if (buf.steps.empty()) return;
    for (auto& st : buf.steps) st.advantage = st.mc_return - net.value(st.obs);
    if (!normalize) return;
    double mean = 0.0;
    for (const auto& st : buf.steps) mean += st.advantage;
    mean /= static_cast<double>(buf.steps.size());
    double var = 0.0;
    for (const auto& st : buf.steps) var += (st.advantage - mean) * (st.advantage - mean);
    var /= static_cast<double>(buf.steps.size());
    double sd = std::sqrt(var);
    for (auto& st : buf.steps) st.advantage = (st.advantage - mean) / (sd + 1e-8);
}

struct PpoMetrics {
    double surrogate = 0.0;
    double value_loss = 0.0;
    double clip_fraction = 0.0;
};

// K epochs of minibatch updates on -surrogate + value_coef * value MSE.
// Gradients of both heads meet in the shared encoder.
template <typename S>
PpoMetrics ppo_update(PolicyValueNet<S>& net, nn::AdamState<S>& opt, const RolloutBuffer& buf,
                      const PpoConfig& cfg, nn::Rng& rng) {
    PpoMetrics metrics;
    if (buf.steps.empty()) return metrics;
    size_t n = buf.steps.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    size_t terms = 0, clipped_terms = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the shared rng keeps epochs deterministic
        for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
        for (size_t ofs = 0; ofs < n; ofs += static_cast<size_t>(cfg.batch)) {
            size_t lim = std::min(ofs + static_cast<size_t>(cfg.batch), n);
            double inv_b = 1.0 / static_cast<double>(lim - ofs);
            net.zero_grad();
            for (size_t bi = ofs; bi < lim; ++bi) {
                const RolloutStep& st = buf.steps[order[bi]];
                auto in = net.trunk_input(st.obs);
                auto logits = net.pi_head.forward(in);
                auto v_out = net.v_head.forward(in);
                auto probs = PolicyValueNet<S>::softmax(logits.data);
                size_t a = static_cast<size_t>(st.action);
                double logp_new = std::log(std::max(probs[a], 1e-300));
                SurrogateTerm term = clipped_surrogate(logp_new, st.logp_old, st.advantage, cfg.clip);
                metrics.surrogate += term.value;
                ++terms;
                if (term.clipped) ++clipped_terms;

                // loss = -surrogate + c_v * (V - G)^2
                nn::Tensor<S> glogits({1, static_cast<int>(probs.size())});
                for (size_t k = 0; k < probs.size(); ++k) {
                    double ind = (k == a) ? 1.0 : 0.0;
                    glogits[k] = static_cast<S>(-term.dlogp * (ind - probs[k]) * inv_b);
                }
                double v = static_cast<double>(v_out[0]);
                double verr = v - st.mc_return;
                metrics.value_loss += verr * verr;
                nn::Tensor<S> gv({1, 1});
                gv[0] = static_cast<S>(cfg.value_coef * 2.0 * verr * inv_b);

                auto g_in_pi = net.pi_head.backward(glogits);
                auto g_in_v = net.v_head.backward(gv);
                std::vector<S> g_enc(static_cast<size_t>(net.encoder.output_dim()));
                for (size_t k = 0; k < g_enc.size(); ++k) g_enc[k] = g_in_pi[k] + g_in_v[k];
                net.encoder.backward(g_enc);
            }
            auto p = net.params();
            auto g = net.grads();
            nn::adam_step(p, g, opt);
        }
    }
    double total = static_cast<double>(terms);
    metrics.surrogate /= total;
    metrics.value_loss /= total;
    metrics.clip_fraction = clipped_terms / total;
    return metrics;
}

}  // namespace setq::rl
