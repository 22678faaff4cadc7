#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "setq/enc/features.hpp"

namespace setq::enc {

// Fixed-size relational neighborhood: for the ego lane and two lanes on each
// side, the two nearest leaders and two nearest followers.
struct RelationalGridSpec {
    int ahead = 2;
    int behind = 2;
    int lateral = 2;

    int slot_count() const { return (2 * lateral + 1) * (ahead + behind); }
    int feature_count() const { return slot_count() * 2 + 3; }  // (dr, dv) per slot + static
};

// Bird's-eye grid: `rows` cells of `cell_length` metres covering
// [-range, +range) longitudinally, `cols` lanes centered on the ego lane.
struct OccupancyGridSpec {
    int rows = 80;
    int cols = 5;
    double cell_length = 2.0;
    double body_length = 4.5;

    double range() const { return rows * cell_length / 2.0; }
};

// Layout: lanes left to right (dl = -lateral .. +lateral); within a lane
// leaders near to far, then followers near to far; each slot is (dr, dv);
// the 3 static features close the vector. Empty slots read as a same-speed
// car at sensor range: leaders (1, 0), followers (-1, 0). Vehicles at
// gap >= 0 count as leaders. Ties in distance break toward the lower id.
inline std::vector<float> build_relational_grid_from(const std::vector<RangedVehicle>& vehicles,
                                                     const StaticFeature& stat, double d_max,
                                                     const RelationalGridSpec& spec = {}) {
    std::vector<float> out;
    out.reserve(static_cast<size_t>(spec.feature_count()));
    for (int dl = -spec.lateral; dl <= spec.lateral; ++dl) {
        std::vector<const RangedVehicle*> leaders, followers;
        for (const auto& v : vehicles) {
            if (v.dl != dl) continue;
            (v.gap >= 0 ? leaders : followers).push_back(&v);
        }
        auto nearer = [](const RangedVehicle* a, const RangedVehicle* b) {
            double da = std::abs(a->gap), db = std::abs(b->gap);
            if (da != db) return da < db;
            return a->id < b->id;
        };
        std::sort(leaders.begin(), leaders.end(), nearer);
        std::sort(followers.begin(), followers.end(), nearer);
        for (int i = 0; i < spec.ahead; ++i) {
            if (i < static_cast<int>(leaders.size())) {
                out.push_back(static_cast<float>(leaders[static_cast<size_t>(i)]->gap / d_max));
                out.push_back(static_cast<float>(leaders[static_cast<size_t>(i)]->dv));
            } else {
                out.push_back(1.0f);
                out.push_back(0.0f);
            }
        }
        for (int i = 0; i < spec.behind; ++i) {
            if (i < static_cast<int>(followers.size())) {
                out.push_back(static_cast<float>(followers[static_cast<size_t>(i)]->gap / d_max));
                out.push_back(static_cast<float>(followers[static_cast<size_t>(i)]->dv));
            } else {
                out.push_back(-1.0f);
                out.push_back(0.0f);
            }
        }
    }
    out.push_back(stat.speed_frac);
    out.push_back(stat.left_available);
    out.push_back(stat.right_available);
    return out;
}

inline std::vector<float> build_relational_grid(const Scene& scene, const EgoState& ego,
                                                const RelationalGridSpec& spec = {},
                                                double d_max = SensorSpec{}.range,
                                                double v_desired = SensorSpec{}.v_desired) {
    auto vehicles = vehicles_in_range(scene, ego, d_max);
    return build_relational_grid_from(vehicles, make_static(ego, scene.lane_count, v_desired), d_max, spec);
}

// Row r covers body-center offsets [-range + r*cell, -range + (r+1)*cell);
// column c is lane dl = c - cols/2. Cells overlapped by a vehicle body
// (center +- body_length/2, positive overlap only) hold 1 + dv; the ego body
// holds 1; free cells hold 0. A vehicle whose center gap falls outside
// [-range, +range) is omitted entirely, as is one outside the lane window.
inline std::vector<float> build_occupancy_grid_from(const std::vector<RangedVehicle>& vehicles,
                                                    const OccupancyGridSpec& spec = {}) {
    std::vector<float> grid(static_cast<size_t>(spec.rows) * spec.cols, 0.0f);
    const double range = spec.range();
    const double half_body = spec.body_length / 2.0;
    auto paint = [&](double center, int col, float value) {
        if (center < -range || center >= range) return;
        if (col < 0 || col >= spec.cols) return;
        double lo = center - half_body;
        double hi = center + half_body;
        int r0 = static_cast<int>(std::floor((lo + range) / spec.cell_length));
        int r1 = static_cast<int>(std::floor((hi + range) / spec.cell_length));
        for (int r = std::max(r0, 0); r <= std::min(r1, spec.rows - 1); ++r) {
            double cell_lo = -range + r * spec.cell_length;
            double cell_hi = cell_lo + spec.cell_length;
            if (lo < cell_hi && hi > cell_lo) {
                grid[static_cast<size_t>(r) * spec.cols + col] = value;
            }
        }
    };
    for (const auto& v : vehicles) {
        int col = static_cast<int>(std::lround(v.lane_offset)) + spec.cols / 2;
        paint(v.gap, col, static_cast<float>(1.0 + v.dv));
    }
    paint(0.0, spec.cols / 2, 1.0f);  // ego last so its cells always read 1
    return grid;
}

inline std::vector<float> build_occupancy_grid(const Scene& scene, const EgoState& ego,
                                               const OccupancyGridSpec& spec = {}) {
    auto vehicles = vehicles_in_range(scene, ego, spec.range());
    return build_occupancy_grid_from(vehicles, spec);
}

}  // namespace setq::enc
