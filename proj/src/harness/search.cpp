#include "setq/harness/search.hpp"

#include <algorithm>
#include <cstdio>

#include "setq/harness/evaluate.hpp"
#include "setq/harness/train.hpp"

namespace setq::harness {

std::vector<enc::Arch> enumerate_search_space(enc::EncoderKind kind) {
    std::vector<enc::Arch> out;
    switch (kind) {
        case enc::EncoderKind::Fixed: {
            for (int width : {50, 100, 200}) {
                for (int layers : {2, 3}) {
                    enc::Arch a;
                    a.kind = kind;
                    a.head.assign(static_cast<size_t>(layers), width);
                    out.push_back(a);
                }
            }
            break;
        }
        case enc::EncoderKind::DeepSet: {
            for (int phi_layers : {1, 2, 3}) {
                for (int phi_dim : {5, 20, 100}) {
                    for (int rho_layers : {1, 2, 3}) {
                        for (int rho_dim : {5, 20, 100}) {
                            enc::Arch a;
                            a.kind = kind;
                            a.phi.assign(static_cast<size_t>(phi_layers), phi_dim);
                            a.rho.assign(static_cast<size_t>(rho_layers), rho_dim);
                            out.push_back(a);
                        }
                    }
                }
            }
            break;
        }
        case enc::EncoderKind::Set2Set: {
            for (int lstm_layers : {1, 2}) {
                for (int readout : {32, 64, 100}) {
                    for (int iters : {5, 20, 40}) {
                        enc::Arch a;
                        a.kind = kind;
                        a.lstm_layers = lstm_layers;
                        a.readout = readout;
                        a.iterations = iters;
                        out.push_back(a);
                    }
                }
            }
            break;
        }
        case enc::EncoderKind::Grid: {
            for (int conv_layers : {2, 3}) {
                for (int kernel_h : {7, 3, 2}) {
                    for (int kernel_w : {2, 1}) {
                        for (int stride_h : {2, 1}) {
                            for (int stride_w : {2, 1}) {
                                for (int filters : {8, 16, 32}) {
                                    enc::Arch a;
                                    a.kind = kind;
                                    a.kernel_h = kernel_h;
                                    a.kernel_w = kernel_w;
                                    a.stride_h = stride_h;
                                    a.stride_w = stride_w;
                                    a.conv_filters.clear();
                                    int f = filters;
                                    for (int l = 0; l < conv_layers; ++l) {
                                        a.conv_filters.push_back(f);
                                        f *= 2;  // filter count doubles per layer
                                    }
                                    out.push_back(a);
                                }
                            }
                        }
                    }
                }
            }
            break;
        }
    }
    return out;
}

std::vector<enc::Arch> sample_configs(enc::EncoderKind kind, int budget, uint64_t seed) {
    auto grid = enumerate_search_space(kind);
    nn::Rng rng(nn::mix_seed(seed, 0x5ea7c4));
    std::vector<enc::Arch> picked;
    if (static_cast<size_t>(budget) >= grid.size()) {
        // exhaustive, shuffled for unbiased tie handling downstream
        std::vector<size_t> idx(grid.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        for (size_t i : idx) picked.push_back(grid[i]);
    } else {
        std::vector<size_t> idx(grid.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        for (int i = 0; i < budget; ++i) picked.push_back(grid[idx[static_cast<size_t>(i)]]);
    }
    return picked;
}

std::vector<SearchEntry> random_search(enc::EncoderKind kind, const SearchOptions& opt) {
    auto configs = sample_configs(kind, opt.budget, opt.seed);
    std::vector<SearchEntry> entries;
    for (size_t i = 0; i < configs.size(); ++i) {
        SearchEntry e;
        e.arch = configs[i];
        e.checkpoint_path = opt.work_dir + "/search_" + encoder_kind_name(kind) + "_" +
                            std::to_string(i) + ".ckpt";

        DqnTrainOptions topt;
        topt.dataset_path = opt.dataset_path;
        topt.checkpoint_path = e.checkpoint_path;
        topt.arch = e.arch;
        topt.cfg = opt.train_cfg;
        topt.seed = nn::mix_seed(opt.seed, 0x7a1, i);
        train_dqn(topt);

        EvalOptions eopt;
        eopt.lanes = opt.lanes;
        eopt.ns = opt.probe_ns;
        eopt.seeds_per_n = opt.probe_seeds_per_n;
        eopt.eval_seed = nn::mix_seed(opt.seed, 0x9e0b);
        eopt.pool_seed = opt.pool_seed;
        eopt.episode_actions = opt.probe_episode_actions;
        eopt.threads = opt.threads;
        e.score = evaluate_checkpoint(e.checkpoint_path, eopt).mean_return();
        if (opt.verbose) {
            std::fprintf(stderr, "  config %zu/%zu score %.2f\n", i + 1, configs.size(), e.score);
        }
        entries.push_back(std::move(e));
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SearchEntry& a, const SearchEntry& b) { return a.score > b.score; });
    return entries;
}

}  // namespace setq::harness
