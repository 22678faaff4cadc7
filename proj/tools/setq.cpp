// Command-line front end: dataset collection, offline/online training,
// scenario-sweep evaluation, baselines, random search and gradient
// verification for the ring-road lane-change agents.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "setq/enc/qnet.hpp"
#include "setq/harness/collect.hpp"
#include "setq/harness/dataset.hpp"
#include "setq/harness/evaluate.hpp"
#include "setq/harness/search.hpp"
#include "setq/sim/scenario_io.hpp"
#include "setq/harness/train.hpp"
#include "setq/nn/grad_check.hpp"

using namespace setq;

namespace {

enc::Arch default_arch(const std::string& encoder) {
    enc::Arch a;
    a.kind = enc::encoder_kind_from_name(encoder);
    return a;
}

void print_report(const harness::EvalReport& report) {
    std::printf("%6s %10s %10s %6s\n", "n", "mean", "std", "runs");
    for (const auto& a : report.aggregates()) {
        std::printf("%6d %10.2f %10.2f %6d\n", a.n, a.mean, a.stddev, a.count);
    }
    std::printf("overall mean return: %.2f over %zu scenarios\n", report.mean_return(),
                report.rows.size());
}

// Worst finite-difference error over a double-precision copy of each
// architecture, driven through a fixed random scene.
double gradcheck_arch(enc::EncoderKind kind, uint64_t seed) {
    enc::Arch arch;
    arch.kind = kind;
    enc::QNetwork<double> net(arch, seed);

    nn::Rng rng(nn::mix_seed(seed, 0x6c));
    enc::ObservationBundle obs;
    int n = 5;
    for (int i = 0; i < n; ++i) {
        enc::DynamicFeature f;
        f.dr = static_cast<float>(rng.uniform(-1, 1));
        f.dv = static_cast<float>(rng.uniform(-1, 1));
        f.dl = rng.uniform_int(-2, 2);
        obs.set.push_back(f);
    }
    enc::sort_canonical(obs.set);
    obs.stat = {0.8f, 1.0f, 0.0f};
    obs.rel.assign(43, 0.0f);
    for (auto& v : obs.rel) v = static_cast<float>(rng.uniform(-1, 1));
    obs.occ.assign(400, 0.0f);
    for (auto& v : obs.occ) v = static_cast<float>(rng.uniform(0, 1.5));

    std::vector<double> probe = {0.7, -1.3, 0.4};
    auto loss_only = [&]() {
        auto q = net.forward(obs);
        double l = 0.0;
        for (size_t i = 0; i < q.size(); ++i) l += probe[i] * q[i];
        return l;
    };
    auto loss_with_grads = [&]() {
        net.zero_grad();
        auto q = net.forward(obs);
        double l = 0.0;
        for (size_t i = 0; i < q.size(); ++i) l += probe[i] * q[i];
        net.backward(probe);
        return l;
    };
    auto params = net.params();
    auto grads = net.grads();
    auto res = nn::grad_check<double>(params, grads, loss_with_grads, loss_only, {1e-4, 8, 64, seed});
    return res.max_rel_err;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-input reinforcement learning on a ring-road highway"};
    app.set_config("--config", "", "read options from an INI/TOML file");
    app.require_subcommand(1);

    // ---- collect ----
    auto* collect = app.add_subcommand("collect", "run the random-lane-change agent and record transitions");
    harness::CollectOptions copt;
    collect->add_option("--out", copt.out_path, "output dataset path")->required();
    collect->add_option("--samples", copt.samples, "number of transitions");
    collect->add_option("--seed", copt.seed, "master seed")->required();
    collect->add_option("--lanes", copt.lanes, "lane count");
    collect->add_option("--n-min", copt.n_min, "min surrounding vehicles per scenario");
    collect->add_option("--n-max", copt.n_max, "max surrounding vehicles per scenario");
    collect->add_option("--episode-actions", copt.episode_actions, "agent actions per scenario");
    collect->add_option("--pool-seed", copt.pool_seed, "driver pool seed");

    // ---- filter ----
    auto* filter = app.add_subcommand("filter", "keep only transitions with at most N vehicles in range");
    std::string filter_in, filter_out;
    int filter_max = 6;
    filter->add_option("--in", filter_in, "input dataset")->required();
    filter->add_option("--out", filter_out, "output dataset")->required();
    filter->add_option("--max-vehicles", filter_max, "maximum set size kept");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train an agent (offline dqn or on-policy ppo)");
    std::string train_algo = "dqn", train_encoder = "deepset";
    harness::DqnTrainOptions dopt;
    harness::PpoTrainOptions popt;
    int64_t train_steps = 50000;
    int ppo_iterations = 100;
    uint64_t train_seed = 1;
    std::string train_dataset, train_out, train_metrics;
    train->add_option("--algo", train_algo, "dqn|ppo")->check(CLI::IsMember({"dqn", "ppo"}));
    train->add_option("--encoder", train_encoder, "deepset|set2set|fixed|grid")
        ->check(CLI::IsMember({"deepset", "set2set", "fixed", "grid"}));
    train->add_option("--dataset", train_dataset, "dataset path (dqn)");
    train->add_option("--out", train_out, "checkpoint path")->required();
    train->add_option("--metrics", train_metrics, "metrics CSV path");
    train->add_option("--steps", train_steps, "gradient steps (dqn)");
    train->add_option("--iterations", ppo_iterations, "ppo iterations");
    train->add_option("--seed", train_seed, "training seed")->required();
    train->add_option("--gamma", dopt.cfg.gamma, "discount factor");
    train->add_option("--lr", dopt.cfg.lr, "learning rate (dqn)");
    train->add_option("--tau", dopt.cfg.tau, "target soft-update step");
    train->add_option("--batch", dopt.cfg.batch, "minibatch size");
    train->add_option("--checkpoint-every", dopt.checkpoint_every, "intermediate checkpoint period");
    train->add_flag("--verbose", dopt.verbose, "progress to stderr");

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "greedy sweep over the standard scenarios");
    std::string eval_checkpoint, eval_out;
    harness::EvalOptions eopt;
    eopt.threads = 2;
    double noise_dr = 0.0, noise_dv = 0.0;
    evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")->required();
    evaluate->add_option("--out", eval_out, "report CSV path");
    evaluate->add_option("--lanes", eopt.lanes, "lane count")->check(CLI::IsMember({3, 5}));
    evaluate->add_option("--ns", eopt.ns, "vehicle counts (default 30..90 step 5)");
    evaluate->add_option("--seeds-per-n", eopt.seeds_per_n, "scenarios per vehicle count");
    evaluate->add_option("--eval-seed", eopt.eval_seed, "sweep seed");
    evaluate->add_option("--pool-seed", eopt.pool_seed, "driver pool seed");
    evaluate->add_option("--episode-actions", eopt.episode_actions, "actions per episode");
    evaluate->add_option("--noise-dr", noise_dr, "sigma of relative-distance noise");
    evaluate->add_option("--noise-dv", noise_dv, "sigma of relative-velocity noise");
    evaluate->add_option("--threads", eopt.threads, "worker threads");
    evaluate->add_option("--dump-trajectory", eopt.trajectory_path, "trajectory CSV for the first scenario");

    // ---- baseline ----
    auto* baseline = app.add_subcommand("baseline", "no-lane-change or rule-based reference agent");
    std::string baseline_kind = "no-lane-change", baseline_out;
    harness::EvalOptions bopt;
    bopt.threads = 2;
    baseline->add_option("--kind", baseline_kind, "no-lane-change|rule-based")
        ->check(CLI::IsMember({"no-lane-change", "rule-based"}));
    baseline->add_option("--out", baseline_out, "report CSV path");
    baseline->add_option("--lanes", bopt.lanes, "lane count");
    baseline->add_option("--ns", bopt.ns, "vehicle counts");
    baseline->add_option("--seeds-per-n", bopt.seeds_per_n, "scenarios per vehicle count");
    baseline->add_option("--eval-seed", bopt.eval_seed, "sweep seed");
    baseline->add_option("--pool-seed", bopt.pool_seed, "driver pool seed");
    baseline->add_option("--episode-actions", bopt.episode_actions, "actions per episode");
    baseline->add_option("--threads", bopt.threads, "worker threads");
    baseline->add_option("--dump-trajectory", bopt.trajectory_path, "trajectory CSV for the first scenario");

    // ---- search ----
    auto* search = app.add_subcommand("search", "random search over an architecture's configuration grid");
    std::string search_encoder = "deepset";
    harness::SearchOptions sopt;
    search->add_option("--encoder", search_encoder, "deepset|set2set|fixed|grid")
        ->check(CLI::IsMember({"deepset", "set2set", "fixed", "grid"}));
    search->add_option("--dataset", sopt.dataset_path, "training dataset")->required();
    search->add_option("--work-dir", sopt.work_dir, "directory for per-config checkpoints")->required();
    search->add_option("--budget", sopt.budget, "configurations to sample");
    search->add_option("--seed", sopt.seed, "search seed")->required();
    search->add_option("--train-steps", sopt.train_cfg.steps, "gradient steps per config");
    search->add_option("--threads", sopt.threads, "eval worker threads");
    search->add_flag("--verbose", sopt.verbose, "progress to stderr");

    // ---- scenario ----
    auto* scenario_cmd = app.add_subcommand("scenario", "run a single scenario from a config file");
    std::string scenario_file, scenario_checkpoint, scenario_baseline, scenario_traj;
    double scen_noise_dr = 0.0, scen_noise_dv = 0.0;
    scenario_cmd->add_option("--file", scenario_file, "scenario config JSON")->required();
    scenario_cmd->add_option("--checkpoint", scenario_checkpoint, "drive with this agent");
    scenario_cmd->add_option("--baseline", scenario_baseline, "no-lane-change|rule-based");
    scenario_cmd->add_option("--dump-trajectory", scenario_traj, "trajectory CSV");
    scenario_cmd->add_option("--noise-dr", scen_noise_dr, "sigma of relative-distance noise");
    scenario_cmd->add_option("--noise-dv", scen_noise_dv, "sigma of relative-velocity noise");

    // ---- gradcheck ----
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference verification of all architectures");
    uint64_t gc_seed = 1;
    gradcheck->add_option("--seed", gc_seed, "seed");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "aggregate one or more evaluation CSVs");
    std::vector<std::string> report_files;
    report_cmd->add_option("files", report_files, "evaluation CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*collect) {
            auto res = harness::collect_dataset(copt);
            std::printf("collected %llu transitions over %d episodes -> %s\n",
                        static_cast<unsigned long long>(res.samples), res.episodes, copt.out_path.c_str());
            std::printf("file hash: %s\n", harness::file_hash_hex(copt.out_path).c_str());
        } else if (*filter) {
            uint64_t kept = harness::filter_dataset_max_vehicles(filter_in, filter_out, filter_max);
            std::printf("kept %llu transitions -> %s\n", static_cast<unsigned long long>(kept),
                        filter_out.c_str());
        } else if (*train) {
            if (train_algo == "dqn") {
                if (train_dataset.empty()) throw std::invalid_argument("dqn training needs --dataset");
                dopt.dataset_path = train_dataset;
                dopt.checkpoint_path = train_out;
                dopt.metrics_path = train_metrics;
                dopt.arch = default_arch(train_encoder);
                dopt.cfg.steps = train_steps;
                dopt.seed = train_seed;
                auto res = harness::train_dqn(dopt);
                std::printf("trained %lld steps, final loss %.6f -> %s\n",
                            static_cast<long long>(res.steps), res.final_loss, train_out.c_str());
            } else {
                if (train_encoder != "deepset")
                    throw std::invalid_argument("ppo supports only the deepset encoder");
                popt.checkpoint_path = train_out;
                popt.metrics_path = train_metrics;
                popt.seed = train_seed;
                popt.iterations = ppo_iterations;
                popt.verbose = dopt.verbose;
                auto res = harness::train_ppo(popt);
                std::printf("ppo trained %lld env steps, last mean return %.2f -> %s\n",
                            static_cast<long long>(res.env_steps), res.mean_return_last_iter,
                            train_out.c_str());
            }
            std::printf("file hash: %s\n", harness::file_hash_hex(train_out).c_str());
        } else if (*evaluate) {
            eopt.noise.sigma_dr = noise_dr;
            eopt.noise.sigma_dv = noise_dv;
            auto report = harness::evaluate_checkpoint(eval_checkpoint, eopt);
            print_report(report);
            if (!eval_out.empty()) {
                harness::write_eval_csv(report, eval_out);
                std::printf("report -> %s\nfile hash: %s\n", eval_out.c_str(),
                            harness::file_hash_hex(eval_out).c_str());
            }
        } else if (*baseline) {
            auto report = harness::run_baseline(harness::baseline_kind_from_name(baseline_kind), bopt);
            print_report(report);
            if (!baseline_out.empty()) {
                harness::write_eval_csv(report, baseline_out);
                std::printf("report -> %s\n", baseline_out.c_str());
            }
        } else if (*search) {
            auto ranked = harness::random_search(enc::encoder_kind_from_name(search_encoder), sopt);
            std::printf("%4s %10s  config\n", "rank", "score");
            for (size_t i = 0; i < ranked.size(); ++i) {
                std::printf("%4zu %10.2f  %s\n", i + 1, ranked[i].score,
                            ranked[i].arch.to_json().dump().c_str());
            }
        } else if (*scenario_cmd) {
            if (scenario_checkpoint.empty() == scenario_baseline.empty()) {
                throw std::invalid_argument("pick exactly one of --checkpoint or --baseline");
            }
            sim::ScenarioConfig cfg = sim::load_scenario_config(scenario_file);
            harness::PolicyFactory factory =
                !scenario_checkpoint.empty()
                    ? harness::checkpoint_policy_factory(scenario_checkpoint)
                    : harness::baseline_policy_factory(
                          harness::baseline_kind_from_name(scenario_baseline), cfg.seed);
            enc::NoiseSpec noise{scen_noise_dr, scen_noise_dv};
            auto row = harness::run_single_scenario(cfg, factory(), noise, scenario_traj);
            std::printf("n=%d lanes=%d seed=%llu return=%.4f lane_changes=%d\n", row.n, row.lanes,
                        static_cast<unsigned long long>(row.seed), row.episode_return,
                        row.lane_changes);
        } else if (*gradcheck) {
            bool ok = true;
            for (auto kind : {enc::EncoderKind::DeepSet, enc::EncoderKind::Set2Set,
                              enc::EncoderKind::Fixed, enc::EncoderKind::Grid}) {
                double err = gradcheck_arch(kind, gc_seed);
                bool pass = err < 1e-4;
                ok = ok && pass;
                std::printf("%-8s max rel err %.3e  %s\n", enc::encoder_kind_name(kind), err,
                            pass ? "ok" : "FAIL");
            }
            if (!ok) return 3;
        } else if (*report_cmd) {
            harness::EvalReport merged;
            for (const auto& f : report_files) {
                auto r = harness::read_eval_csv(f);
                merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
            }
            print_report(merged);
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
