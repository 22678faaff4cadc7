#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "setq/enc/deep_set.hpp"
#include "setq/enc/features.hpp"
#include "setq/enc/grids.hpp"
#include "setq/enc/qnet.hpp"
#include "setq/enc/set2set.hpp"
#include "setq/nn/grad_check.hpp"

#include "support.hpp"

using namespace setq;
using testsupport::feat;

namespace {

enc::Scene one_car_scene(double car_pos, double car_speed, double car_lane, int lanes = 3) {
    enc::Scene s;
    s.lane_count = lanes;
    s.vehicles.push_back({1, car_pos, car_speed, car_lane});
    return s;
}

// brute-force ring gap: try both travel directions, keep the smaller
double oracle_ring_gap(double ego, double other, double ring) {
    double fwd = std::fmod(other - ego + ring, ring);
    double bwd = std::fmod(ego - other + ring, ring);
    return fwd <= bwd ? fwd : -bwd;
}

}  // namespace

TEST_CASE("extract_features: dr and dv formulas") {
    enc::EgoState ego{100.0, 20.0, 1};
    auto scene = one_car_scene(140.0, 20.0, 1.0);
    auto [set, stat] = enc::extract_features(scene, ego, 80.0);
    REQUIRE(set.size() == 1);
    CHECK(set[0].dr == doctest::Approx(0.5));  // +40 m gap over 80 m range
    CHECK(set[0].dv == doctest::Approx(0.0));  // same speed
    CHECK(set[0].dl == 0);
    CHECK(stat.speed_frac == doctest::Approx(20.0 / 24.0));
    CHECK(stat.left_available == 1.0f);
    CHECK(stat.right_available == 1.0f);
}

TEST_CASE("extract_features: ring wrap-around picks the short way") {
    enc::EgoState ego{990.0, 20.0, 0};
    auto scene = one_car_scene(30.0, 22.0, 0.0);
    auto [set, stat] = enc::extract_features(scene, ego, 80.0);
    REQUIRE(set.size() == 1);
    CHECK(set[0].dr == doctest::Approx(0.5));  // signed gap +40 across the origin

    nn::Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        double a = rng.uniform() * 1000.0;
        double b = rng.uniform() * 1000.0;
        double got = enc::signed_ring_gap(a, b, 1000.0);
        CHECK(got == doctest::Approx(oracle_ring_gap(a, b, 1000.0)).epsilon(1e-12));
    }
}

TEST_CASE("extract_features: sensor range is closed, beyond is invisible") {
    enc::EgoState ego{0.0, 20.0, 1};
    enc::Scene s;
    s.vehicles.push_back({1, 80.0, 20.0, 1.0});   // exactly at range
    s.vehicles.push_back({2, 80.5, 20.0, 1.0});   // beyond
    s.vehicles.push_back({3, 919.0, 20.0, 2.0});  // 81 m behind, beyond
    auto [set, stat] = enc::extract_features(s, ego, 80.0);
    REQUIRE(set.size() == 1);
    CHECK(set[0].dr == doctest::Approx(1.0));
}

TEST_CASE("extract_features: dv clamp near standstill") {
    enc::EgoState ego{0.0, 0.0, 0};
    auto scene = one_car_scene(40.0, 24.0, 0.0);
    auto [set, stat] = enc::extract_features(scene, ego, 80.0);
    REQUIRE(set.size() == 1);
    CHECK(set[0].dv == doctest::Approx(20.0));  // clamped
}

TEST_CASE("deep set: empty set equals rho of the zero vector") {
    nn::Rng rng(4);
    enc::DeepSetEncoder<float> e(3, {20, 80}, {80, 20});
    e.init(rng);
    auto out = e.forward({});
    nn::Tensor<float> zeros({1, 80});
    auto expect = e.rho.forward(zeros);
    REQUIRE(out.size() == 20);
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == expect[i]);
}

TEST_CASE("deep set: identity phi sums the elements before rho") {
    enc::DeepSetEncoder<float> e(3, {3}, {4});
    for (int i = 0; i < 3; ++i) e.phi.layers[0].w.at(i, i) = 1.0f;  // identity, zero bias
    nn::Rng rng(8);
    e.rho.init(rng);
    enc::DynamicSet set = {feat(0.5f, 0, 0), feat(0.25f, 0, 0)};
    auto out = e.forward(set);
    nn::Tensor<float> pooled({1, 3}, {0.75f, 0.0f, 0.0f});
    auto expect = e.rho.forward(pooled);
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == expect[i]);
}

TEST_CASE("deep set: bit-exact permutation invariance") {
    nn::Rng rng(12);
    enc::DeepSetEncoder<float> e(3, {20, 80}, {80, 20});
    e.init(rng);
    for (int trial = 0; trial < 50; ++trial) {
        int n = static_cast<int>(rng.uniform_int(31));
        auto set = testsupport::random_set(rng, n);
        auto base = e.forward(set);
        auto shuffled = set;
        for (size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
        auto out = e.forward(shuffled);
        REQUIRE(out.size() == base.size());
        for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == base[i]);
    }
}

TEST_CASE("deep set: max pooling variant forwards and backwards") {
    nn::Rng rng(21);
    enc::DeepSetEncoder<double> e(3, {8}, {6}, enc::Pooling::Max);
    e.init(rng);
    auto set = testsupport::random_set(rng, 5);
    std::vector<double> probe(6);
    for (auto& v : probe) v = rng.uniform(-1, 1);

    auto loss_only = [&]() {
        auto out = e.forward(set);
        double l = 0;
        for (size_t i = 0; i < out.size(); ++i) l += probe[i] * out[i];
        return l;
    };
    auto loss_grad = [&]() {
        e.zero_grad();
        double l = loss_only();
        e.backward(probe);
        return l;
    };
    nn::ParameterSet<double> ps, gs;
    e.register_params(ps, "e.");
    e.register_grads(gs, "e.");
    auto res = nn::grad_check<double>(ps, gs, loss_grad, loss_only);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("set2set: singleton attends to itself") {
    nn::Rng rng(31);
    enc::Set2SetEncoder<double> e(6, 1, 5, 32);
    e.init(rng);
    enc::Set2SetEncoder<double>::Trace trace;
    enc::DynamicSet set = {feat(0.4f, -0.2f, 1)};
    e.forward(set, &trace);
    REQUIRE(trace.last_alpha.size() == 1);
    CHECK(trace.last_alpha[0] == doctest::Approx(1.0));
    CHECK(trace.last_beta[0] == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(trace.last_beta[1] == doctest::Approx(-0.2).epsilon(1e-6));
    CHECK(trace.last_beta[2] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("set2set: identical elements share attention equally") {
    nn::Rng rng(32);
    enc::Set2SetEncoder<double> e(6, 1, 3, 32);
    e.init(rng);
    enc::Set2SetEncoder<double>::Trace trace;
    enc::DynamicSet set = {feat(0.3f, 0.1f, -1), feat(0.3f, 0.1f, -1)};
    e.forward(set, &trace);
    REQUIRE(trace.last_alpha.size() == 2);
    CHECK(trace.last_alpha[0] == doctest::Approx(0.5));
    CHECK(trace.last_alpha[1] == doctest::Approx(0.5));
}

TEST_CASE("set2set: attention softmax arithmetic") {
    // Zero LSTM weights with saturated input/candidate/output gate biases
    // give the known query tanh(1) per unit; the projection and elements
    // are arranged so the scores come out (0, ln 3).
    enc::Set2SetEncoder<double> e(6, 1, 1, 8);
    auto& cell = e.cells[0];
    for (int k = 0; k < 6; ++k) {
        cell.b[static_cast<size_t>(k)] = 20.0;       // input gate ~ 1
        cell.b[static_cast<size_t>(12 + k)] = 20.0;  // candidate ~ 1
        cell.b[static_cast<size_t>(18 + k)] = 20.0;  // output gate ~ 1
    }
    e.attn_proj.at(0, 0) = 1.0;  // s = (q_0, 0, 0)
    double q0 = std::tanh(1.0);
    double x2 = std::log(3.0) / q0;

    enc::Set2SetEncoder<double>::Trace trace;
    enc::DynamicSet set = {feat(0.0f, 0.0f, 0), feat(static_cast<float>(x2), 0.0f, 0)};
    e.forward(set, &trace);
    REQUIRE(trace.last_alpha.size() == 2);
    CHECK(trace.last_alpha[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(trace.last_alpha[1] == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("set2set: empty set feeds a zero query to the readout") {
    nn::Rng rng(33);
    enc::Set2SetEncoder<float> e(6, 1, 5, 32);
    e.init(rng);
    auto out = e.forward({});
    nn::Tensor<float> zeros({1, 9});
    auto expect = e.readout.forward(zeros);
    REQUIRE(out.size() == 32);
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == expect[i]);
}

TEST_CASE("set2set: bit-exact permutation invariance") {
    nn::Rng rng(34);
    enc::Set2SetEncoder<float> e(6, 1, 5, 32);
    e.init(rng);
    for (int trial = 0; trial < 30; ++trial) {
        int n = static_cast<int>(rng.uniform_int(31));
        auto set = testsupport::random_set(rng, n);
        auto base = e.forward(set);
        auto shuffled = set;
        for (size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
        auto out = e.forward(shuffled);
        for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == base[i]);
    }
}

TEST_CASE("set2set: gradients flow through the unrolled attention") {
    nn::Rng rng(35);
    enc::Set2SetEncoder<double> e(6, 2, 4, 16);  // stacked cells
    e.init(rng);
    auto set = testsupport::random_set(rng, 6);
    std::vector<double> probe(16);
    for (auto& v : probe) v = rng.uniform(-1, 1);

    auto loss_only = [&]() {
        auto out = e.forward(set);
        double l = 0;
        for (size_t i = 0; i < out.size(); ++i) l += probe[i] * out[i];
        return l;
    };
    auto loss_grad = [&]() {
        e.zero_grad();
        double l = loss_only();
        e.backward(probe);
        return l;
    };
    nn::ParameterSet<double> ps, gs;
    e.register_params(ps, "e.");
    e.register_grads(gs, "e.");
    auto res = nn::grad_check<double>(ps, gs, loss_grad, loss_only, {1e-4, 8, 64, 35});
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("relational grid: empty road is all default slots") {
    enc::Scene s;
    enc::EgoState ego{500.0, 20.0, 1};
    auto grid = enc::build_relational_grid(s, ego);
    REQUIRE(grid.size() == 43);
    for (int lane = 0; lane < 5; ++lane) {
        int base = lane * 8;
        CHECK(grid[base + 0] == 1.0f);
        CHECK(grid[base + 1] == 0.0f);
        CHECK(grid[base + 2] == 1.0f);
        CHECK(grid[base + 3] == 0.0f);
        CHECK(grid[base + 4] == -1.0f);
        CHECK(grid[base + 5] == 0.0f);
        CHECK(grid[base + 6] == -1.0f);
        CHECK(grid[base + 7] == 0.0f);
    }
    CHECK(grid[40] == doctest::Approx(20.0 / 24.0));
    CHECK(grid[41] == 1.0f);
    CHECK(grid[42] == 1.0f);
}

TEST_CASE("relational grid: single leader fills the nearest slot") {
    enc::EgoState ego{100.0, 20.0, 1};
    auto scene = one_car_scene(140.0, 22.0, 1.0);
    auto grid = enc::build_relational_grid(scene, ego);
    int base = 2 * 8;  // ego lane block
    CHECK(grid[base + 0] == doctest::Approx(0.5));
    CHECK(grid[base + 1] == doctest::Approx((22.0 - 20.0) / (20.0 + 1e-3)));
    CHECK(grid[base + 2] == 1.0f);   // second leader slot stays default
    CHECK(grid[base + 4] == -1.0f);  // follower slots stay default
}

TEST_CASE("relational grid: nearest two of three leaders win, ordered near to far") {
    enc::EgoState ego{0.0, 20.0, 1};
    enc::Scene s;
    s.vehicles.push_back({1, 60.0, 21.0, 1.0});
    s.vehicles.push_back({2, 20.0, 22.0, 1.0});
    s.vehicles.push_back({3, 40.0, 23.0, 1.0});
    auto grid = enc::build_relational_grid(s, ego);
    int base = 2 * 8;
    CHECK(grid[base + 0] == doctest::Approx(0.25));  // 20 m
    CHECK(grid[base + 2] == doctest::Approx(0.5));   // 40 m
}

TEST_CASE("relational grid: lanes beyond the road edge stay default") {
    enc::EgoState ego{100.0, 20.0, 0};  // leftmost lane
    enc::Scene s;
    s.lane_count = 3;
    auto grid = enc::build_relational_grid(s, ego);
    for (int lane = 0; lane < 2; ++lane) {  // dl = -2, -1 do not exist
        int base = lane * 8;
        CHECK(grid[base + 0] == 1.0f);
        CHECK(grid[base + 4] == -1.0f);
    }
    CHECK(grid[41] == 0.0f);  // no lane to the left
}

TEST_CASE("relational grid: default slot equals a same-speed car at sensor range") {
    enc::EgoState ego{0.0, 20.0, 1};
    enc::Scene empty;
    auto base_grid = enc::build_relational_grid(empty, ego);
    auto scene = one_car_scene(80.0, 20.0, 1.0);  // dr = 1, dv = 0
    auto with_car = enc::build_relational_grid(scene, ego);
    REQUIRE(base_grid.size() == with_car.size());
    for (size_t i = 0; i < base_grid.size(); ++i) CHECK(base_grid[i] == with_car[i]);
}

TEST_CASE("occupancy grid: empty road marks only the ego body") {
    enc::Scene s;
    enc::EgoState ego{500.0, 20.0, 1};
    auto grid = enc::build_occupancy_grid(s, ego);
    REQUIRE(grid.size() == 400);
    int ones = 0;
    for (int r = 0; r < 80; ++r) {
        for (int c = 0; c < 5; ++c) {
            float v = grid[static_cast<size_t>(r) * 5 + c];
            if (v != 0.0f) {
                CHECK(v == 1.0f);
                CHECK(c == 2);
                ++ones;
            }
        }
    }
    // the 4.5 m body centered on the row-40 boundary covers rows 38..41
    CHECK(ones == 4);
    CHECK(grid[38 * 5 + 2] == 1.0f);
    CHECK(grid[41 * 5 + 2] == 1.0f);
}

TEST_CASE("occupancy grid: cells carry 1 + dv") {
    enc::EgoState ego{0.0, 20.0, 1};
    double dv = 0.2;
    double other_speed = 20.0 + dv * (20.0 + enc::kDvEpsilon);
    auto scene = one_car_scene(30.0, other_speed, 1.0);
    auto grid = enc::build_occupancy_grid(scene, ego);
    int hits = 0;
    for (int r = 42; r < 80; ++r) {
        float v = grid[static_cast<size_t>(r) * 5 + 2];
        if (v != 0.0f) {
            CHECK(v == doctest::Approx(1.2).epsilon(1e-6));
            ++hits;
        }
    }
    CHECK(hits >= 2);
}

TEST_CASE("occupancy grid: half-open range excludes a car exactly at +d_max") {
    enc::EgoState ego{0.0, 20.0, 1};
    auto scene = one_car_scene(80.0, 25.0, 1.0);
    auto grid = enc::build_occupancy_grid(scene, ego);
    auto empty = enc::build_occupancy_grid(enc::Scene{}, ego);
    for (size_t i = 0; i < grid.size(); ++i) CHECK(grid[i] == empty[i]);
}

TEST_CASE("occupancy grid: vehicles outside the 5-lane window are omitted") {
    enc::EgoState ego{0.0, 20.0, 0};  // window covers dl in [-2, 2]
    enc::Scene s;
    s.lane_count = 5;
    s.vehicles.push_back({1, 30.0, 20.0, 3.0});  // dl = +3
    auto grid = enc::build_occupancy_grid(s, ego);
    auto empty = enc::build_occupancy_grid(enc::Scene{}, ego);
    for (size_t i = 0; i < grid.size(); ++i) CHECK(grid[i] == empty[i]);
}

TEST_CASE("locality: a vehicle beyond sensor range changes no encoder input") {
    enc::EgoState ego{100.0, 20.0, 1};
    enc::Scene near_scene = one_car_scene(150.0, 18.0, 2.0);
    enc::Scene with_far = near_scene;
    with_far.vehicles.push_back({2, 181.0, 30.0, 0.0});

    auto a = enc::make_observation(near_scene, ego);
    auto b = enc::make_observation(with_far, ego);
    CHECK(a.set.size() == b.set.size());
    for (size_t i = 0; i < a.rel.size(); ++i) CHECK(a.rel[i] == b.rel[i]);
    for (size_t i = 0; i < a.occ.size(); ++i) CHECK(a.occ[i] == b.occ[i]);
}

TEST_CASE("q_forward: zero weights expose the final bias") {
    enc::Arch arch;  // deepset default
    enc::QNetwork<float> net(arch, 0);
    for (const auto& e : net.params()) e.tensor->fill(0.0f);
    net.head.layers.back().b = nn::Tensor<float>({3}, {0.5f, -1.0f, 2.0f});
    auto obs = testsupport::obs_from_set({feat(0.1f, 0.2f, 1)});
    auto q = net.forward(obs);
    CHECK(q[0] == 0.5f);
    CHECK(q[1] == -1.0f);
    CHECK(q[2] == 2.0f);
}

TEST_CASE("q_forward: permuting the set leaves the q-values unchanged") {
    nn::Rng rng(55);
    for (auto kind : {enc::EncoderKind::DeepSet, enc::EncoderKind::Set2Set}) {
        enc::Arch arch;
        arch.kind = kind;
        enc::QNetwork<float> net(arch, 77);
        auto set = testsupport::random_set(rng, 12);
        auto obs = testsupport::obs_from_set(set);
        auto base = net.forward(obs);
        for (int trial = 0; trial < 5; ++trial) {
            auto shuffled = set;
            for (size_t i = shuffled.size(); i > 1; --i)
                std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
            auto obs2 = testsupport::obs_from_set(shuffled);
            auto q = net.forward(obs2);
            for (size_t a = 0; a < q.size(); ++a) CHECK(q[a] == base[a]);
        }
    }
}

TEST_CASE("q_forward: golden snapshot of the default deepset network") {
    enc::Arch arch;
    enc::QNetwork<float> net(arch, 2024);
    enc::DynamicSet set = {feat(0.5f, -0.1f, 0), feat(-0.25f, 0.4f, -1), feat(0.9f, 0.0f, 2)};
    auto obs = testsupport::obs_from_set(set, {0.75f, 1.0f, 0.0f});
    auto q = net.forward(obs);
    // frozen from the first verified run of this architecture and seed
    CHECK(q[0] == doctest::Approx(0.199314207).epsilon(1e-6));
    CHECK(q[1] == doctest::Approx(-0.134434432).epsilon(1e-6));
    CHECK(q[2] == doctest::Approx(-0.0336546749).epsilon(1e-6));
}

TEST_CASE("arch descriptor json round-trip") {
    for (auto kind : {enc::EncoderKind::DeepSet, enc::EncoderKind::Set2Set, enc::EncoderKind::Fixed,
                      enc::EncoderKind::Grid}) {
        enc::Arch a;
        a.kind = kind;
        auto j = a.to_json();
        enc::Arch b = enc::Arch::from_json(j);
        CHECK(b.to_json() == j);
        CHECK(b.encoder_output_dim() == a.encoder_output_dim());
    }
    enc::Arch grid;
    grid.kind = enc::EncoderKind::Grid;
    CHECK(grid.encoder_output_dim() == 32 * 20 * 5);
}
