#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "setq/nn/params.hpp"
#include "setq/nn/rng.hpp"

namespace setq::nn {

struct GradCheckOptions {
    double step = 1e-4;
    int coords_per_tensor = 8;  // sampled per tensor, so every layer is covered
    int min_coords = 64;
    uint64_t seed = 1;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    int coords_checked = 0;
    int coords_skipped = 0;  // non-smooth points (a ReLU kink inside the stencil)
    std::string worst_name;
};

// Central finite differences against analytic gradients.
//
// `loss_with_grads` must zero the grad buffers, run forward+backward and
// return the loss; `loss_only` must run the forward pass alone.
//
// The estimate is taken at steps h and h/2; when the two disagree the
// stencil crosses a kink (ReLU), where a difference quotient approximates
// no derivative, so the coordinate is replaced by a fresh sample. Relative
// error uses max(|analytic|, |numeric|); both below 1e-12 counts as exact.
template <typename S>
GradCheckResult grad_check(const ParameterSet<S>& params, const ParameterSet<S>& grads,
                           const std::function<double()>& loss_with_grads,
                           const std::function<double()>& loss_only,
                           GradCheckOptions opt = {}) {
    check_aligned(params, grads, "grad_check");
    loss_with_grads();

    Rng rng(opt.seed);
    GradCheckResult res;

    auto fd_at = [&](size_t ti, size_t j, double h) {
        S* slot = &params[ti].tensor->data[j];
        const S saved = *slot;
        *slot = static_cast<S>(static_cast<double>(saved) + h);
        double lp = loss_only();
        *slot = static_cast<S>(static_cast<double>(saved) - h);
        double lm = loss_only();
        *slot = saved;
        return (lp - lm) / (2.0 * h);
    };

    auto check_coord = [&](size_t ti, size_t j) -> bool {  // false = skipped
        double fd_full = fd_at(ti, j, opt.step);
        double fd_half = fd_at(ti, j, opt.step / 2.0);
        double scale = std::max({std::abs(fd_full), std::abs(fd_half), 1e-8});
        if (std::abs(fd_full - fd_half) > 1e-3 * scale) {
            ++res.coords_skipped;
            return false;
        }
        double analytic = static_cast<double>(grads[ti].tensor->data[j]);
        double denom = std::max(std::abs(analytic), std::abs(fd_half));
        double rel = (denom < 1e-12) ? 0.0 : std::abs(analytic - fd_half) / denom;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_name = params[ti].name;
        }
        ++res.coords_checked;
        return true;
    };

    std::vector<std::pair<size_t, size_t>> coords;
    for (size_t ti = 0; ti < params.size(); ++ti) {
        size_t n = params[ti].tensor->size();
        int take = static_cast<int>(std::min<size_t>(static_cast<size_t>(opt.coords_per_tensor), n));
        for (int c = 0; c < take; ++c) coords.emplace_back(ti, rng.uniform_int(n));
    }
    while (static_cast<int>(coords.size()) < opt.min_coords && !coords.empty()) {
        size_t ti = rng.uniform_int(params.size());
        coords.emplace_back(ti, rng.uniform_int(params[ti].tensor->size()));
    }

    const int budget = static_cast<int>(coords.size()) * 3;
    int attempts = 0;
    for (size_t k = 0; k < coords.size() && attempts < budget; ++k) {
        ++attempts;
        auto [ti, j] = coords[k];
        if (!check_coord(ti, j)) {
            // replace a kinked sample with a fresh one from the same tensor
            coords.emplace_back(ti, rng.uniform_int(params[ti].tensor->size()));
        }
    }
    return res;
}

}  // namespace setq::nn
