#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "setq/enc/qnet.hpp"
#include "setq/nn/rng.hpp"
#include "setq/sim/highway.hpp"

namespace setq::rl {

// One offline sample. The ring-road task is continuing, so there is no
// terminal flag.
struct Transition {
    enc::ObservationBundle state;
    Action action = Action::Keep;
    float reward = 0.0f;
    enc::ObservationBundle next_state;
};

// Fixed-capacity uniform replay. Sampling is with replacement over the
// whole buffer and deterministic under the seed.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity, uint64_t seed = 0)
        : capacity_(capacity), rng_(nn::mix_seed(seed, 0xb0ff)) {
        if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
    }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[write_pos_] = std::move(t);
        }
        write_pos_ = (write_pos_ + 1) % capacity_;
    }

    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    const Transition& at(size_t i) const { return data_[i]; }

    std::vector<size_t> sample_indices(size_t batch) {
        if (data_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
        std::vector<size_t> idx(batch);
        for (auto& i : idx) i = rng_.uniform_int(data_.size());
        return idx;
    }

private:
    size_t capacity_;
    size_t write_pos_ = 0;
    std::vector<Transition> data_;
    nn::Rng rng_;
};

}  // namespace setq::rl
