#include "setq/harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "setq/harness/collect.hpp"
#include "setq/harness/train.hpp"

namespace setq::harness {

std::vector<Aggregate> EvalReport::aggregates() const {
    std::vector<Aggregate> out;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.n == row.n; });
        if (it == out.end()) {
            out.push_back({row.n, 0.0, 0.0, 0});
            it = out.end() - 1;
        }
        it->mean += row.episode_return;
        it->count += 1;
    }
    for (auto& a : out) a.mean /= a.count;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.n == row.n; });
        it->stddev += (row.episode_return - it->mean) * (row.episode_return - it->mean);
    }
    for (auto& a : out) a.stddev = a.count > 1 ? std::sqrt(a.stddev / (a.count - 1)) : 0.0;
    return out;
}

double EvalReport::mean_return() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rows) s += r.episode_return;
    return s / rows.size();
}

double EvalReport::mean_return_for_n(int n) const {
    double s = 0.0;
    int c = 0;
    for (const auto& r : rows) {
        if (r.n == n) {
            s += r.episode_return;
            ++c;
        }
    }
    return c ? s / c : 0.0;
}

namespace {

EvalRow run_scenario_impl(const sim::ScenarioConfig& cfg, const ScenarioPolicy& policy,
                          const enc::NoiseSpec& noise, std::ostream* trajectory) {
    sim::Simulator sim(cfg);
    if (trajectory) sim.set_trajectory_stream(trajectory);

    const bool noisy = noise.active();
    nn::Rng noise_rng(nn::mix_seed(cfg.seed, 0x401e));

    EvalRow row;
    row.n = cfg.n_vehicles;
    row.lanes = cfg.lanes;
    row.seed = cfg.seed;
    double total = 0.0;
    for (int t = 0; t < cfg.episode_actions; ++t) {
        enc::ObservationBundle obs = enc::make_observation(sim.scene(), sim.ego_state(), {},
                                                           noisy ? &noise : nullptr,
                                                           noisy ? &noise_rng : nullptr);
        Action a = policy(sim, obs);
        total += sim.step_agent_action(a);
    }
    row.episode_return = total;
    row.lane_changes = sim.lane_changes_executed();
    return row;
}

EvalRow run_scenario(const ScenarioPolicy& policy, const EvalOptions& opt, int n, int scenario_index,
                     std::ostream* trajectory) {
    sim::ScenarioConfig cfg;
    cfg.lanes = opt.lanes;
    cfg.n_vehicles = n;
    cfg.pool_seed = opt.pool_seed;
    cfg.episode_actions = opt.episode_actions;
    cfg.seed = scenario_seed(opt.eval_seed, n, scenario_index);
    return run_scenario_impl(cfg, policy, opt.noise, trajectory);
}

}  // namespace

EvalRow run_single_scenario(const sim::ScenarioConfig& cfg, const ScenarioPolicy& policy,
                            const enc::NoiseSpec& noise, const std::string& trajectory_path) {
    if (trajectory_path.empty()) return run_scenario_impl(cfg, policy, noise, nullptr);
    std::ofstream os(trajectory_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open trajectory file: " + trajectory_path);
    os << "step,vehicle_id,pos,lane,speed\n";
    return run_scenario_impl(cfg, policy, noise, &os);
}

EvalReport run_sweep(const PolicyFactory& factory, const EvalOptions& opt) {
    struct Job {
        int n;
        int index;
    };
    std::vector<Job> jobs;
    for (int n : opt.effective_ns()) {
        for (int i = 0; i < opt.seeds_per_n; ++i) jobs.push_back({n, i});
    }
    std::vector<EvalRow> rows(jobs.size());

    std::unique_ptr<std::ofstream> trajectory;
    if (!opt.trajectory_path.empty()) {
        trajectory = std::make_unique<std::ofstream>(opt.trajectory_path, std::ios::trunc);
        (*trajectory) << "step,vehicle_id,pos,lane,speed\n";
    }

    int threads = std::max(1, opt.threads);
    if (threads == 1) {
        ScenarioPolicy policy = factory();
        for (size_t j = 0; j < jobs.size(); ++j) {
            rows[j] = run_scenario(policy, opt, jobs[j].n, jobs[j].index,
                                   j == 0 ? trajectory.get() : nullptr);
        }
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w]() {
                ScenarioPolicy policy = factory();
                for (size_t j = static_cast<size_t>(w); j < jobs.size(); j += static_cast<size_t>(threads)) {
                    rows[j] = run_scenario(policy, opt, jobs[j].n, jobs[j].index,
                                           j == 0 ? trajectory.get() : nullptr);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    EvalReport report;
    report.rows = std::move(rows);
    return report;
}

PolicyFactory checkpoint_policy_factory(const std::string& checkpoint_path) {
    std::string algo = checkpoint_algo(checkpoint_path);
    if (algo == "dqn") {
        return [checkpoint_path]() -> ScenarioPolicy {
            auto ensemble = std::make_shared<rl::QEnsemble<float>>(load_dqn_checkpoint(checkpoint_path));
            return [ensemble](const sim::Simulator&, const enc::ObservationBundle& obs) {
                return ensemble->greedy_action(obs);
            };
        };
    }
    if (algo == "ppo") {
        return [checkpoint_path]() -> ScenarioPolicy {
            auto net = std::make_shared<rl::PolicyValueNet<float>>(load_ppo_checkpoint(checkpoint_path));
            return [net](const sim::Simulator&, const enc::ObservationBundle& obs) {
                rl::EnvObs eo{obs.set, obs.stat};
                auto probs = net->action_probs(eo);
                size_t best = 0;
                for (size_t i = 1; i < probs.size(); ++i)
                    if (probs[i] > probs[best]) best = i;
                return static_cast<Action>(best);
            };
        };
    }
    throw std::runtime_error("unknown checkpoint algo: " + algo);
}

EvalReport evaluate_checkpoint(const std::string& checkpoint_path, const EvalOptions& opt) {
    return run_sweep(checkpoint_policy_factory(checkpoint_path), opt);
}

BaselineKind baseline_kind_from_name(const std::string& name) {
    if (name == "no-lane-change" || name == "keep") return BaselineKind::NoLaneChange;
    if (name == "rule-based" || name == "rule") return BaselineKind::RuleBased;
    throw std::invalid_argument("unknown baseline: " + name);
}

PolicyFactory baseline_policy_factory(BaselineKind kind, uint64_t seed) {
    if (kind == BaselineKind::NoLaneChange) {
        return []() -> ScenarioPolicy {
            return [](const sim::Simulator&, const enc::ObservationBundle&) { return Action::Keep; };
        };
    }
    // rule-based: drive the ego with the same heuristic the other cars use
    return [seed]() -> ScenarioPolicy {
        auto rng = std::make_shared<nn::Rng>(nn::mix_seed(seed, 0x27b));
        return [rng](const sim::Simulator& sim, const enc::ObservationBundle&) {
            const sim::Vehicle& e = sim.ego();
            if (e.changing()) return Action::Keep;
            sim::LaneNeighborInfo cur = sim.lane_info(e, e.lane);
            sim::LaneNeighborInfo left = sim.lane_info(e, e.lane - 1);
            sim::LaneNeighborInfo right = sim.lane_info(e, e.lane + 1);
            int delta = sim::decide_lane_change(e.drv, e.speed, cur, left, right, rng->uniform());
            if (delta < 0) return Action::Left;
            if (delta > 0) return Action::Right;
            return Action::Keep;
        };
    };
}

EvalReport run_baseline(BaselineKind kind, const EvalOptions& opt) {
    return run_sweep(baseline_policy_factory(kind, opt.eval_seed), opt);
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_eval_csv(const EvalReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open report for writing: " + path);
    os << "type,n,lanes,seed,episode_return,return_std,lane_changes\n";
    for (const auto& r : report.rows) {
        os << "episode," << r.n << ',' << r.lanes << ',' << r.seed << ',' << fmt_double(r.episode_return)
           << ",," << r.lane_changes << '\n';
    }
    int lanes = report.rows.empty() ? 0 : report.rows.front().lanes;
    for (const auto& a : report.aggregates()) {
        os << "aggregate," << a.n << ',' << lanes << ",," << fmt_double(a.mean) << ','
           << fmt_double(a.stddev) << ",\n";
    }
    if (!os) throw std::runtime_error("report write failed: " + path);
}

EvalReport read_eval_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open report: " + path);
    std::string line;
    std::getline(is, line);  // header
    EvalReport report;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 7 || fields[0] != "episode") continue;
        EvalRow r;
        r.n = std::stoi(fields[1]);
        r.lanes = std::stoi(fields[2]);
        r.seed = std::stoull(fields[3]);
        r.episode_return = std::stod(fields[4]);
        r.lane_changes = std::stoi(fields[6]);
        report.rows.push_back(r);
    }
    return report;
}

}  // namespace setq::harness
