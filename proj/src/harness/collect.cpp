#include "setq/harness/collect.hpp"

#include <json.hpp>

#include "setq/harness/dataset.hpp"

namespace setq::harness {

uint64_t scenario_seed(uint64_t base, int n, int index) {
    return nn::mix_seed(base, static_cast<uint64_t>(n), static_cast<uint64_t>(index));
}

std::string sim_config_hash(const sim::ScenarioConfig& cfg) {
    std::string s = std::to_string(cfg.lanes) + "|" + std::to_string(cfg.ring_length) + "|" +
                    std::to_string(cfg.dt) + "|" + std::to_string(cfg.steps_per_action) + "|" +
                    std::to_string(cfg.change_steps) + "|" + std::to_string(cfg.pool_seed);
    uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

CollectResult collect_dataset(const CollectOptions& opt) {
    if (opt.samples == 0) throw std::invalid_argument("collect: sample count must be positive");

    sim::ScenarioConfig base_cfg;
    base_cfg.lanes = opt.lanes;
    base_cfg.pool_seed = opt.pool_seed;
    base_cfg.episode_actions = opt.episode_actions;

    nlohmann::json header;
    header["kind"] = "transitions";
    header["schema"] = "set(dr,dv,dl)+static3+rel43+occ";
    header["seed"] = opt.seed;
    header["lanes"] = opt.lanes;
    header["n_range"] = {opt.n_min, opt.n_max};
    header["episode_actions"] = opt.episode_actions;
    header["pool_seed"] = opt.pool_seed;
    header["requested_samples"] = opt.samples;
    header["sim_config_hash"] = sim_config_hash(base_cfg);

    DatasetWriter writer(opt.out_path, header.dump());
    nn::Rng rng(nn::mix_seed(opt.seed, 0xc011));

    CollectResult res;
    int scenario_idx = 0;
    while (writer.count() < opt.samples) {
        sim::ScenarioConfig cfg = base_cfg;
        cfg.n_vehicles = rng.uniform_int(opt.n_min, opt.n_max);
        cfg.seed = scenario_seed(opt.seed, cfg.n_vehicles, scenario_idx);
        ++scenario_idx;

        sim::Simulator sim(cfg);
        ++res.episodes;
        enc::ObservationBundle obs = enc::make_observation(sim.scene(), sim.ego_state());
        for (int t = 0; t < cfg.episode_actions && writer.count() < opt.samples; ++t) {
            Action options[3] = {Action::Keep, Action::Left, Action::Right};
            Action safe[3];
            int n_safe = 0;
            for (Action a : options) {
                if (sim.safety_check(a) == a) safe[n_safe++] = a;
            }
            Action chosen = safe[rng.uniform_int(static_cast<uint64_t>(n_safe))];
            double r = sim.step_agent_action(chosen);
            enc::ObservationBundle next = enc::make_observation(sim.scene(), sim.ego_state());
            rl::Transition tr;
            tr.state = std::move(obs);
            tr.action = chosen;
            tr.reward = static_cast<float>(r);
            tr.next_state = next;
            writer.write(tr);
            obs = std::move(next);
        }
    }
    res.samples = writer.count();
    writer.finalize();
    return res;
}

}  // namespace setq::harness
