#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "setq/enc/qnet.hpp"
#include "setq/nn/adam.hpp"
#include "setq/rl/replay.hpp"

namespace setq::rl {

struct TrainConfig {
    double gamma = 0.99;
    double lr = 1e-4;
    double tau = 1e-4;
    int batch = 64;
    int64_t steps = 200000;
};

struct StepMetrics {
    double loss = 0.0;  // q1 + q2
    double loss_q1 = 0.0;
    double loss_q2 = 0.0;
    double target_mean = 0.0;
};

// Two online networks with target copies. Targets bootstrap from the
// element-wise minimum of the two target nets (clipped double Q); both
// online nets regress to the same targets. The task is continuing, so
// no terminal masking exists anywhere.
template <typename S>
struct QEnsemble {
    enc::Arch arch;
    TrainConfig cfg;
    enc::QNetwork<S> q1, q2, t1, t2;
    nn::AdamState<S> opt1, opt2;

    QEnsemble(const enc::Arch& a, uint64_t seed, const TrainConfig& c)
        : arch(a), cfg(c),
          q1(a, nn::mix_seed(seed, 1)), q2(a, nn::mix_seed(seed, 2)),
          t1(a, nn::mix_seed(seed, 1)), t2(a, nn::mix_seed(seed, 2)),
          opt1(c.lr), opt2(c.lr) {
        // targets start as copies of the online nets
        nn::copy_params(t1.params(), q1.params());
        nn::copy_params(t2.params(), q2.params());
    }

    // y_i = r_i + gamma * max_a min(Q1'(s', a), Q2'(s', a))
    std::vector<double> compute_targets(const ReplayBuffer& buffer, const std::vector<size_t>& batch) {
        std::vector<double> y(batch.size());
        for (size_t i = 0; i < batch.size(); ++i) {
            const Transition& tr = buffer.at(batch[i]);
            auto v1 = t1.forward(tr.next_state);
            auto v2 = t2.forward(tr.next_state);
            double best = -1e300;
            for (size_t a = 0; a < v1.size(); ++a) {
                double m = std::min(static_cast<double>(v1[a]), static_cast<double>(v2[a]));
                best = std::max(best, m);
            }
            y[i] = static_cast<double>(tr.reward) + cfg.gamma * best;
        }
        return y;
    }

    // Mean squared error on the taken action's Q-value, per online network;
    // fills the grad buffers of both nets.
    StepMetrics td_loss(const ReplayBuffer& buffer, const std::vector<size_t>& batch,
                        const std::vector<double>& targets) {
        q1.zero_grad();
        q2.zero_grad();
        StepMetrics m;
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        for (size_t i = 0; i < batch.size(); ++i) {
            const Transition& tr = buffer.at(batch[i]);
            const size_t a = static_cast<size_t>(tr.action);
            for (enc::QNetwork<S>* net : {&q1, &q2}) {
                auto q = net->forward(tr.state);
                double diff = static_cast<double>(q[a]) - targets[i];
                (net == &q1 ? m.loss_q1 : m.loss_q2) += diff * diff * inv_b;
                std::vector<S> gq(q.size(), S(0));
                gq[a] = static_cast<S>(2.0 * diff * inv_b);
                net->backward(gq);
            }
            m.target_mean += targets[i] * inv_b;
        }
        m.loss = m.loss_q1 + m.loss_q2;
        return m;
    }

    StepMetrics train_step(ReplayBuffer& buffer) {
        auto batch = buffer.sample_indices(static_cast<size_t>(cfg.batch));
        auto targets = compute_targets(buffer, batch);
        StepMetrics m = td_loss(buffer, batch, targets);
        auto p1 = q1.params(), g1 = q1.grads();
        auto p2 = q2.params(), g2 = q2.grads();
        nn::adam_step(p1, g1, opt1);
        nn::adam_step(p2, g2, opt2);
        nn::soft_update(t1.params(), p1, cfg.tau);
        nn::soft_update(t2.params(), p2, cfg.tau);
        return m;
    }

    // argmax of the mean of both online nets; ties resolve to the earlier
    // action (keep < left < right).
    Action greedy_action(const enc::ObservationBundle& obs) {
        auto v1 = q1.forward(obs);
        auto v2 = q2.forward(obs);
        size_t best = 0;
        double best_v = -1e300;
        for (size_t a = 0; a < v1.size(); ++a) {
            double v = 0.5 * (static_cast<double>(v1[a]) + static_cast<double>(v2[a]));
            if (v > best_v) {
                best_v = v;
                best = a;
            }
        }
        return static_cast<Action>(best);
    }
};

}  // namespace setq::rl
