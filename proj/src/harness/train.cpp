#include "setq/harness/train.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "setq/harness/dataset.hpp"
#include "setq/nn/checkpoint.hpp"

namespace setq::harness {

namespace {

// Combined named view over both online nets.
nn::ParameterSet<float> ensemble_params(rl::QEnsemble<float>& e) {
    nn::ParameterSet<float> ps;
    auto add = [&](enc::QNetwork<float>& net, const std::string& prefix) {
        auto sub = net.params();
        for (const auto& entry : sub) ps.add(prefix + entry.name, entry.tensor);
    };
    add(e.q1, "q1.");
    add(e.q2, "q2.");
    return ps;
}

nn::ParameterSet<float> policy_value_params(rl::PolicyValueNet<float>& net) { return net.params(); }

}  // namespace

void save_dqn_checkpoint(const std::string& path, rl::QEnsemble<float>& ensemble) {
    nlohmann::json desc;
    desc["algo"] = "dqn";
    desc["arch"] = ensemble.arch.to_json();
    nn::save_checkpoint(path, desc.dump(), ensemble_params(ensemble));
}

rl::QEnsemble<float> load_dqn_checkpoint(const std::string& path, const rl::TrainConfig& cfg) {
    auto ck = nn::load_checkpoint(path);
    auto desc = nlohmann::json::parse(ck.descriptor);
    if (desc.at("algo").get<std::string>() != "dqn") {
        throw std::runtime_error("checkpoint is not a dqn checkpoint: " + path);
    }
    enc::Arch arch = enc::Arch::from_json(desc.at("arch"));
    rl::QEnsemble<float> ensemble(arch, 0, cfg);
    nn::apply_checkpoint(ck, ensemble_params(ensemble));
    nn::copy_params(ensemble.t1.params(), ensemble.q1.params());
    nn::copy_params(ensemble.t2.params(), ensemble.q2.params());
    return ensemble;
}

std::string checkpoint_algo(const std::string& path) {
    auto ck = nn::load_checkpoint(path);
    return nlohmann::json::parse(ck.descriptor).at("algo").get<std::string>();
}

DqnTrainResult train_dqn(const DqnTrainOptions& opt) {
    auto filter = LoadFilter::for_encoder(opt.arch.kind);
    rl::ReplayBuffer buffer = load_dataset(opt.dataset_path, nn::mix_seed(opt.seed, 0x5a3), filter);
    rl::QEnsemble<float> ensemble(opt.arch, opt.seed, opt.cfg);

    std::ofstream metrics;
    if (!opt.metrics_path.empty()) {
        metrics.open(opt.metrics_path, std::ios::trunc);
        metrics << "step,loss,target_mean,wall_ms\n";
    }
    auto t0 = std::chrono::steady_clock::now();

    DqnTrainResult res;
    for (int64_t step = 1; step <= opt.cfg.steps; ++step) {
        rl::StepMetrics m = ensemble.train_step(buffer);
        res.final_loss = m.loss;
        res.final_target_mean = m.target_mean;
        res.steps = step;
        if (metrics.is_open() && (step % opt.log_every == 0 || step == opt.cfg.steps)) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            metrics << step << ',' << m.loss << ',' << m.target_mean << ',' << ms << '\n';
        }
        if (opt.verbose && step % 5000 == 0) {
            std::fprintf(stderr, "  step %lld/%lld loss %.5f target %.3f\n",
                         static_cast<long long>(step), static_cast<long long>(opt.cfg.steps), m.loss,
                         m.target_mean);
        }
        if (opt.checkpoint_every > 0 && step % opt.checkpoint_every == 0 && step != opt.cfg.steps) {
            save_dqn_checkpoint(opt.checkpoint_path + ".step" + std::to_string(step), ensemble);
        }
    }
    save_dqn_checkpoint(opt.checkpoint_path, ensemble);
    return res;
}

HighwayEnv::HighwayEnv(int lanes, int n_min, int n_max, int episode_actions, uint64_t pool_seed)
    : lanes_(lanes), n_min_(n_min), n_max_(n_max), episode_actions_(episode_actions),
      pool_seed_(pool_seed) {}

rl::EnvObs HighwayEnv::reset(uint64_t seed) {
    sim::ScenarioConfig cfg;
    cfg.lanes = lanes_;
    cfg.pool_seed = pool_seed_;
    cfg.episode_actions = episode_actions_;
    nn::Rng rng(nn::mix_seed(seed, 0xe45));
    cfg.n_vehicles = rng.uniform_int(n_min_, n_max_);
    cfg.seed = seed;
    sim_ = std::make_unique<sim::Simulator>(cfg);
    return observe();
}

std::pair<rl::EnvObs, double> HighwayEnv::step(Action a) {
    double r = sim_->step_agent_action(a);
    return {observe(), r};
}

rl::EnvObs HighwayEnv::observe() const {
    auto [set, stat] = enc::extract_features(sim_->scene(), sim_->ego_state(), enc::SensorSpec{}.range);
    return {std::move(set), stat};
}

void save_ppo_checkpoint(const std::string& path, rl::PolicyValueNet<float>& net,
                         const std::vector<int>& phi, const std::vector<int>& rho,
                         const std::vector<int>& head) {
    nlohmann::json desc;
    desc["algo"] = "ppo";
    desc["phi"] = phi;
    desc["rho"] = rho;
    desc["head"] = head;
    nn::save_checkpoint(path, desc.dump(), policy_value_params(net));
}

rl::PolicyValueNet<float> load_ppo_checkpoint(const std::string& path) {
    auto ck = nn::load_checkpoint(path);
    auto desc = nlohmann::json::parse(ck.descriptor);
    if (desc.at("algo").get<std::string>() != "ppo") {
        throw std::runtime_error("checkpoint is not a ppo checkpoint: " + path);
    }
    rl::PolicyValueNet<float> net(desc.at("phi").get<std::vector<int>>(),
                                  desc.at("rho").get<std::vector<int>>(),
                                  desc.at("head").get<std::vector<int>>(), 0);
    nn::apply_checkpoint(ck, policy_value_params(net));
    return net;
}

PpoTrainResult train_ppo(const PpoTrainOptions& opt) {
    rl::PolicyValueNet<float> net(opt.phi, opt.rho, opt.head, opt.seed);
    nn::AdamState<float> adam(opt.cfg.lr);
    HighwayEnv env(opt.lanes, opt.n_min, opt.n_max, opt.episode_actions, opt.pool_seed);
    nn::Rng update_rng(nn::mix_seed(opt.seed, 0x9907));

    std::ofstream metrics;
    if (!opt.metrics_path.empty()) {
        metrics.open(opt.metrics_path, std::ios::trunc);
        metrics << "iteration,surrogate,value_loss,clip_fraction,mean_return,wall_ms\n";
    }
    auto t0 = std::chrono::steady_clock::now();

    PpoTrainResult res;
    for (int iter = 1; iter <= opt.iterations; ++iter) {
        uint64_t rollout_seed = nn::mix_seed(opt.seed, 0x5011, static_cast<uint64_t>(iter));
        rl::RolloutBuffer buf = rl::collect_rollout(net, env, opt.cfg.episodes_per_iter, rollout_seed);
        rl::compute_returns(buf, opt.cfg.gamma, opt.cfg.horizon);
        rl::compute_advantages(buf, net);
        rl::PpoMetrics m = rl::ppo_update(net, adam, buf, opt.cfg, update_rng);

        double ep_return = 0.0;
        for (const auto& st : buf.steps) ep_return += st.reward;
        ep_return /= std::max<size_t>(buf.episode_starts.size(), 1);
        res.mean_return_last_iter = ep_return;
        res.env_steps += static_cast<int64_t>(buf.steps.size());

        if (metrics.is_open()) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            metrics << iter << ',' << m.surrogate << ',' << m.value_loss << ',' << m.clip_fraction
                    << ',' << ep_return << ',' << ms << '\n';
        }
        if (opt.verbose && iter % 10 == 0) {
            std::fprintf(stderr, "  ppo iter %d/%d return %.2f value_loss %.4f\n", iter,
                         opt.iterations, ep_return, m.value_loss);
        }
    }
    save_ppo_checkpoint(opt.checkpoint_path, net, opt.phi, opt.rho, opt.head);
    return res;
}

}  // namespace setq::harness
