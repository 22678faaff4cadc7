#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "setq/nn/rng.hpp"

namespace setq::enc {

// Per-vehicle feature triple relative to the ego. dl is the signed lane
// offset (negative = left).
struct DynamicFeature {
    float dr = 0.0f;
    float dv = 0.0f;
    int dl = 0;
};

using DynamicSet = std::vector<DynamicFeature>;

// Network-side static input: ego speed as a fraction of the desired speed
// plus lane availability flags.
struct StaticFeature {
    float speed_frac = 0.0f;
    float left_available = 0.0f;
    float right_available = 0.0f;
};

// Scene snapshot handed from the simulator to the encoders. Positions are
// curvilinear (front bumper) on the ring; lane_pos is continuous so that a
// car mid lane-change sits between two integer lanes.
struct SceneVehicle {
    int id = 0;
    double pos = 0.0;
    double speed = 0.0;
    double lane_pos = 0.0;
};

struct Scene {
    double ring_length = 1000.0;
    int lane_count = 3;
    std::vector<SceneVehicle> vehicles;
};

struct EgoState {
    double pos = 0.0;
    double speed = 0.0;
    int lane = 0;
};

struct SensorSpec {
    double range = 80.0;      // d_max, metres ahead and behind
    double v_desired = 24.0;  // m/s, normalizes the static speed input
};

// Additive Gaussian measurement noise on dr and dv; lane assignment stays
// exact.
struct NoiseSpec {
    double sigma_dr = 0.0;
    double sigma_dv = 0.0;

    bool active() const { return sigma_dr > 0.0 || sigma_dv > 0.0; }
};

inline constexpr double kDvEpsilon = 1e-3;
inline constexpr double kDvClamp = 20.0;

// Signed gap from ego to other along the ring, picking the direction with
// the smaller magnitude; result in (-ring/2, ring/2].
inline double signed_ring_gap(double ego_pos, double other_pos, double ring_length) {
    double d = std::fmod(other_pos - ego_pos, ring_length);
    if (d < 0) d += ring_length;
    if (d > ring_length / 2) d -= ring_length;
    return d;
}

inline double relative_speed(double v_other, double v_ego) {
    double dv = (v_other - v_ego) / (v_ego + kDvEpsilon);
    return std::clamp(dv, -kDvClamp, kDvClamp);
}

// Vehicle within sensor range together with the measurements the grids need.
struct RangedVehicle {
    int id = 0;
    double gap = 0.0;          // signed metres, possibly noisy
    double dv = 0.0;           // possibly noisy
    int dl = 0;
    double lane_offset = 0.0;  // continuous lane offset for grid placement
};

// All vehicles with |gap| <= d_max, features optionally perturbed by noise.
// Inclusion always uses the true gap.
inline std::vector<RangedVehicle> vehicles_in_range(const Scene& scene, const EgoState& ego,
                                                    double d_max, const NoiseSpec* noise = nullptr,
                                                    nn::Rng* noise_rng = nullptr) {
    std::vector<RangedVehicle> out;
    for (const auto& v : scene.vehicles) {
        double gap = signed_ring_gap(ego.pos, v.pos, scene.ring_length);
        if (std::abs(gap) > d_max) continue;
        RangedVehicle r;
        r.id = v.id;
        r.gap = gap;
        r.dv = relative_speed(v.speed, ego.speed);
        double offset = v.lane_pos - ego.lane;
        r.lane_offset = offset;
        r.dl = static_cast<int>(std::lround(offset));
        if (noise && noise->active() && noise_rng) {
            r.gap += noise->sigma_dr * d_max * noise_rng->normal();
            r.dv = std::clamp(r.dv + noise->sigma_dv * noise_rng->normal(), -kDvClamp, kDvClamp);
        }
        out.push_back(r);
    }
    return out;
}

inline StaticFeature make_static(const EgoState& ego, int lane_count, double v_desired) {
    StaticFeature s;
    s.speed_frac = static_cast<float>(ego.speed / v_desired);
    s.left_available = ego.lane > 0 ? 1.0f : 0.0f;
    s.right_available = ego.lane < lane_count - 1 ? 1.0f : 0.0f;
    return s;
}

// Stable storage order: sets are kept sorted by (dl, dr, dv, id). Encoders
// are permutation invariant regardless; sorting only makes logs and files
// reproducible.
inline void sort_canonical(DynamicSet& set) {
    std::sort(set.begin(), set.end(), [](const DynamicFeature& a, const DynamicFeature& b) {
        if (a.dl != b.dl) return a.dl < b.dl;
        if (a.dr != b.dr) return a.dr < b.dr;
        return a.dv < b.dv;
    });
}

inline std::pair<DynamicSet, StaticFeature> extract_features(const Scene& scene, const EgoState& ego,
                                                             double d_max,
                                                             double v_desired = SensorSpec{}.v_desired,
                                                             const NoiseSpec* noise = nullptr,
                                                             nn::Rng* noise_rng = nullptr) {
    DynamicSet set;
    for (const auto& r : vehicles_in_range(scene, ego, d_max, noise, noise_rng)) {
        DynamicFeature f;
        f.dr = static_cast<float>(r.gap / d_max);
        f.dv = static_cast<float>(r.dv);
        f.dl = r.dl;
        set.push_back(f);
    }
    sort_canonical(set);
    return {std::move(set), make_static(ego, scene.lane_count, v_desired)};
}

}  // namespace setq::enc
