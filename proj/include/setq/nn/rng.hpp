#pragma once

#include <cmath>
#include <cstdint>

namespace setq::nn {

// splitmix64; used everywhere instead of <random> so that seeded runs
// produce identical streams on any platform/toolchain.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stateless mix of several keys into one seed.
inline uint64_t mix_seed(uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = a;
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (b + 1);
    splitmix64(s);
    s ^= 0xbf58476d1ce4e5b9ULL * (c + 1);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) { return n ? next_u64() % n : 0; }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Box-Muller, one value per call (the pair's second half is dropped to
    // keep the draw count state-independent).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Rng split(uint64_t key) { return Rng(mix_seed(next_u64(), key)); }

private:
    uint64_t state_;
};

}  // namespace setq::nn
