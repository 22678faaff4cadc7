#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "setq/enc/deep_set.hpp"
#include "setq/enc/grids.hpp"
#include "setq/enc/set2set.hpp"
#include "setq/nn/conv2d.hpp"
#include "setq/nn/mlp.hpp"

namespace setq::enc {

enum class EncoderKind { DeepSet, Set2Set, Fixed, Grid };

inline const char* encoder_kind_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::DeepSet: return "deepset";
        case EncoderKind::Set2Set: return "set2set";
        case EncoderKind::Fixed: return "fixed";
        case EncoderKind::Grid: return "grid";
    }
    return "?";
}

inline EncoderKind encoder_kind_from_name(const std::string& s) {
    if (s == "deepset") return EncoderKind::DeepSet;
    if (s == "set2set") return EncoderKind::Set2Set;
    if (s == "fixed") return EncoderKind::Fixed;
    if (s == "grid") return EncoderKind::Grid;
    throw std::invalid_argument("unknown encoder kind: " + s);
}

// Self-describing architecture; embedded as JSON in every checkpoint.
struct Arch {
    EncoderKind kind = EncoderKind::DeepSet;

    std::vector<int> phi{20, 80};
    std::vector<int> rho{80, 20};
    Pooling pooling = Pooling::Sum;

    int lstm_hidden = 6;
    int lstm_layers = 1;
    int iterations = 5;
    int readout = 32;

    std::vector<int> conv_filters{16, 32};
    int kernel_h = 3, kernel_w = 1;
    int stride_h = 2, stride_w = 1;

    std::vector<int> head{100, 100};
    int actions = 3;

    RelationalGridSpec rel_spec{};
    OccupancyGridSpec occ_spec{};

    std::vector<int> head_with_output() const {
        std::vector<int> dims = head;
        dims.push_back(actions);
        return dims;
    }

    int encoder_output_dim() const {
        switch (kind) {
            case EncoderKind::DeepSet: return rho.back();
            case EncoderKind::Set2Set: return readout;
            case EncoderKind::Fixed: return rel_spec.slot_count() * 2;
            case EncoderKind::Grid: {
                int h = occ_spec.rows, w = occ_spec.cols, ch = 1;
                for (int f : conv_filters) {
                    h = nn::Conv2d<float>::out_size(h, stride_h);
                    w = nn::Conv2d<float>::out_size(w, stride_w);
                    ch = f;
                }
                return ch * h * w;
            }
        }
        return 0;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["encoder"] = encoder_kind_name(kind);
        j["head"] = head;
        j["actions"] = actions;
        switch (kind) {
            case EncoderKind::DeepSet:
                j["phi"] = phi;
                j["rho"] = rho;
                j["pooling"] = pooling == Pooling::Sum ? "sum" : "max";
                break;
            case EncoderKind::Set2Set:
                j["lstm_hidden"] = lstm_hidden;
                j["lstm_layers"] = lstm_layers;
                j["iterations"] = iterations;
                j["readout"] = readout;
                break;
            case EncoderKind::Fixed:
                break;
            case EncoderKind::Grid:
                j["conv_filters"] = conv_filters;
                j["kernel"] = {kernel_h, kernel_w};
                j["stride"] = {stride_h, stride_w};
                break;
        }
        return j;
    }

    static Arch from_json(const nlohmann::json& j) {
        Arch a;
        a.kind = encoder_kind_from_name(j.at("encoder").get<std::string>());
        a.head = j.at("head").get<std::vector<int>>();
        a.actions = j.at("actions").get<int>();
        switch (a.kind) {
            case EncoderKind::DeepSet:
                a.phi = j.at("phi").get<std::vector<int>>();
                a.rho = j.at("rho").get<std::vector<int>>();
                a.pooling = j.at("pooling").get<std::string>() == "max" ? Pooling::Max : Pooling::Sum;
                break;
            case EncoderKind::Set2Set:
                a.lstm_hidden = j.at("lstm_hidden").get<int>();
                a.lstm_layers = j.at("lstm_layers").get<int>();
                a.iterations = j.at("iterations").get<int>();
                a.readout = j.at("readout").get<int>();
                break;
            case EncoderKind::Fixed:
                break;
            case EncoderKind::Grid:
                a.conv_filters = j.at("conv_filters").get<std::vector<int>>();
                a.kernel_h = j.at("kernel")[0].get<int>();
                a.kernel_w = j.at("kernel")[1].get<int>();
                a.stride_h = j.at("stride")[0].get<int>();
                a.stride_w = j.at("stride")[1].get<int>();
                break;
        }
        return a;
    }
};

// Everything any of the four encoders consumes, extracted once per scene.
struct ObservationBundle {
    DynamicSet set;
    StaticFeature stat;
    std::vector<float> rel;  // 43 values, static features at the tail
    std::vector<float> occ;  // rows x cols, row-major
};

inline ObservationBundle make_observation(const Scene& scene, const EgoState& ego,
                                          const SensorSpec& sensor = {},
                                          const NoiseSpec* noise = nullptr,
                                          nn::Rng* noise_rng = nullptr,
                                          const RelationalGridSpec& rel_spec = {},
                                          const OccupancyGridSpec& occ_spec = {}) {
    ObservationBundle obs;
    auto ranged = vehicles_in_range(scene, ego, sensor.range, noise, noise_rng);
    obs.stat = make_static(ego, scene.lane_count, sensor.v_desired);
    for (const auto& r : ranged) {
        DynamicFeature f;
        f.dr = static_cast<float>(r.gap / sensor.range);
        f.dv = static_cast<float>(r.dv);
        f.dl = r.dl;
        obs.set.push_back(f);
    }
    sort_canonical(obs.set);
    obs.rel = build_relational_grid_from(ranged, obs.stat, sensor.range, rel_spec);
    obs.occ = build_occupancy_grid_from(ranged, occ_spec);
    return obs;
}

// Encoder + Q-head. The head always sees concat(encoder output, static).
// For the fixed relational input the "encoder" is the 40 slot features; the
// grid encoder is the conv stack on the occupancy grid.
template <typename S>
struct QNetwork {
    Arch arch;
    DeepSetEncoder<S> deepset;
    Set2SetEncoder<S> set2set;
    std::vector<nn::Conv2d<S>> conv;
    nn::Mlp<S> head;

    int cached_encoder_dim_ = 0;

    QNetwork() = default;

    explicit QNetwork(const Arch& a, uint64_t seed = 0) : arch(a) {
        switch (arch.kind) {
            case EncoderKind::DeepSet:
                deepset = DeepSetEncoder<S>(3, arch.phi, arch.rho, arch.pooling);
                break;
            case EncoderKind::Set2Set:
                set2set = Set2SetEncoder<S>(arch.lstm_hidden, arch.lstm_layers, arch.iterations, arch.readout);
                break;
            case EncoderKind::Fixed:
                break;
            case EncoderKind::Grid: {
                int ch = 1;
                for (int f : arch.conv_filters) {
                    conv.emplace_back(f, ch, arch.kernel_h, arch.kernel_w, arch.stride_h, arch.stride_w);
                    ch = f;
                }
                break;
            }
        }
        head = nn::Mlp<S>::dense_stack(arch.encoder_output_dim() + 3, arch.head_with_output(), true);
        nn::Rng rng(nn::mix_seed(seed, 0x51e7));
        switch (arch.kind) {
            case EncoderKind::DeepSet: deepset.init(rng); break;
            case EncoderKind::Set2Set: set2set.init(rng); break;
            case EncoderKind::Fixed: break;
            case EncoderKind::Grid:
                for (auto& c : conv) c.init(rng);
                break;
        }
        head.init(rng);
    }

    std::vector<S> forward(const ObservationBundle& obs) {
        std::vector<S> feat = encode(obs);
        cached_encoder_dim_ = static_cast<int>(feat.size());
        nn::Tensor<S> in({1, static_cast<int>(feat.size()) + 3});
        for (size_t i = 0; i < feat.size(); ++i) in[i] = feat[i];
        in[feat.size() + 0] = static_cast<S>(obs.stat.speed_frac);
        in[feat.size() + 1] = static_cast<S>(obs.stat.left_available);
        in[feat.size() + 2] = static_cast<S>(obs.stat.right_available);
        return head.forward(in).data;
    }

    void backward(const std::vector<S>& grad_q) {
        nn::Tensor<S> g({1, static_cast<int>(grad_q.size())}, grad_q);
        nn::Tensor<S> gin = head.backward(g);
        std::vector<S> genc(gin.data.begin(), gin.data.begin() + cached_encoder_dim_);
        switch (arch.kind) {
            case EncoderKind::DeepSet:
                deepset.backward(genc);
                break;
            case EncoderKind::Set2Set:
                set2set.backward(genc);
                break;
            case EncoderKind::Fixed:
                break;
            case EncoderKind::Grid: {
                nn::Tensor<S> gc(conv.back().cached_preact.shape, genc);
                for (auto it = conv.rbegin(); it != conv.rend(); ++it) gc = it->backward(gc);
                break;
            }
        }
    }

    void zero_grad() {
        switch (arch.kind) {
            case EncoderKind::DeepSet: deepset.zero_grad(); break;
            case EncoderKind::Set2Set: set2set.zero_grad(); break;
            case EncoderKind::Fixed: break;
            case EncoderKind::Grid:
                for (auto& c : conv) c.zero_grad();
                break;
        }
        head.zero_grad();
    }

    nn::ParameterSet<S> params() {
        nn::ParameterSet<S> ps;
        register_into(ps, false);
        return ps;
    }

    nn::ParameterSet<S> grads() {
        nn::ParameterSet<S> ps;
        register_into(ps, true);
        return ps;
    }

private:
    std::vector<S> encode(const ObservationBundle& obs) {
        switch (arch.kind) {
            case EncoderKind::DeepSet:
                return deepset.forward(obs.set);
            case EncoderKind::Set2Set:
                return set2set.forward(obs.set);
            case EncoderKind::Fixed: {
                int slots = arch.rel_spec.slot_count() * 2;
                if (static_cast<int>(obs.rel.size()) != slots + 3) {
                    throw std::invalid_argument("relational view has " + std::to_string(obs.rel.size()) +
                                                " features, expected " + std::to_string(slots + 3));
                }
                std::vector<S> f(static_cast<size_t>(slots));
                for (int i = 0; i < slots; ++i) f[static_cast<size_t>(i)] = static_cast<S>(obs.rel[static_cast<size_t>(i)]);
                return f;
            }
            case EncoderKind::Grid: {
                const auto& spec = arch.occ_spec;
                if (static_cast<int>(obs.occ.size()) != spec.rows * spec.cols) {
                    throw std::invalid_argument("occupancy view has " + std::to_string(obs.occ.size()) +
                                                " cells, expected " + std::to_string(spec.rows * spec.cols));
                }
                nn::Tensor<S> x({1, 1, spec.rows, spec.cols});
                for (size_t i = 0; i < obs.occ.size(); ++i) x[i] = static_cast<S>(obs.occ[i]);
                for (auto& c : conv) x = c.forward(x);
                return x.data;
            }
        }
        return {};
    }

    void register_into(nn::ParameterSet<S>& ps, bool grads_view) {
        switch (arch.kind) {
            case EncoderKind::DeepSet:
                grads_view ? deepset.register_grads(ps, "enc.") : deepset.register_params(ps, "enc.");
                break;
            case EncoderKind::Set2Set:
                grads_view ? set2set.register_grads(ps, "enc.") : set2set.register_params(ps, "enc.");
                break;
            case EncoderKind::Fixed:
                break;
            case EncoderKind::Grid:
                for (size_t i = 0; i < conv.size(); ++i) {
                    if (grads_view)
                        conv[i].register_grads(ps, "enc.conv" + std::to_string(i));
                    else
                        conv[i].register_params(ps, "enc.conv" + std::to_string(i));
                }
                break;
        }
        grads_view ? head.register_grads(ps, "head.") : head.register_params(ps, "head.");
    }
};

}  // namespace setq::enc
