#include "setq/sim/scenario_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace setq::sim {

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open scenario config: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scenario config is not valid JSON: " + std::string(e.what()));
    }
    ScenarioConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "n") cfg.n_vehicles = value.get<int>();
        else if (key == "lanes") cfg.lanes = value.get<int>();
        else if (key == "seed") cfg.seed = value.get<uint64_t>();
        else if (key == "episode_actions") cfg.episode_actions = value.get<int>();
        else if (key == "pool_seed") cfg.pool_seed = value.get<uint64_t>();
        else throw std::invalid_argument("unknown scenario config key: " + key);
    }
    if (cfg.n_vehicles < 0 || cfg.lanes < 1) {
        throw std::invalid_argument("scenario config out of range: n=" + std::to_string(cfg.n_vehicles) +
                                    " lanes=" + std::to_string(cfg.lanes));
    }
    return cfg;
}

void save_scenario_config(const ScenarioConfig& cfg, const std::string& path) {
    nlohmann::json j;
    j["n"] = cfg.n_vehicles;
    j["lanes"] = cfg.lanes;
    j["seed"] = cfg.seed;
    j["episode_actions"] = cfg.episode_actions;
    j["pool_seed"] = cfg.pool_seed;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write scenario config: " + path);
    os << j.dump(2) << '\n';
}

}  // namespace setq::sim
