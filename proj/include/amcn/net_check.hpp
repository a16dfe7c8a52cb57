#pragma once

#include <cstdint>
#include <vector>

#include "amcn/net.hpp"
#include "amcn/nn/gradcheck.hpp"
#include "amcn/nn/loss.hpp"

namespace amcn {

// Finite-difference check of the end-to-end training gradient on a random
// 64-bit model and batch. The adaptive loss weights are evaluated once at
// the base point and then held fixed, matching their treatment as detached
// constants during backpropagation.
inline nn::GradCheckReport amcn_gradcheck(const AmcnConfig& cfg, int patch, int batch,
                                          std::uint64_t seed,
                                          const nn::GradCheckOptions& opts = {}) {
    cfg.validate();
    if (patch % cfg.scale_factor != 0) {
        throw InvalidArgument("patch size must be divisible by the scale factor");
    }
    AmcnNet<double> net = AmcnNet<double>::random_init(cfg, seed);
    Rng rng(mix_seed(seed, 0x67726164ULL));
    const int r = cfg.scale_factor;
    const int lp = patch / r;

    auto random_leaf = [&](nn::Shape shape, double lo, double hi) {
        std::vector<double> v(nn::numel(shape));
        for (double& x : v) x = uniform(rng, lo, hi);
        return nn::Tensor<double>::leaf(std::move(shape), std::move(v));
    };
    auto lr = random_leaf({batch, 1, lp, lp}, 0.5, 20.0);
    auto anc = random_leaf({batch, cfg.n_ancillary, patch, patch}, -1.0, 1.0);
    auto target_residual = random_leaf({batch, 1, patch, patch}, -0.5, 0.5);
    auto up = nn::bilinear_upsample(lr, r);

    auto losses = [&]() {
        AmcnForward<double> fwd = net.forward_from_up(up, anc);
        auto l_c = nn::charbonnier_loss(fwd.xi_norm, target_residual, nn::kLossEpsilon);
        auto pred_n = nn::add(fwd.up_norm, fwd.xi_norm);
        auto l_d = nn::degradation_loss(lr, pred_n, nn::kLossEpsilon, r);
        return std::make_pair(l_c, l_d);
    };
    auto [lc0, ld0] = losses();
    const double c0 = lc0.item();
    const double d0 = ld0.item();
    const double alpha = c0 / (c0 + d0);
    const double beta = 1.0 - alpha;

    auto closure = [&]() {
        auto [l_c, l_d] = losses();
        return nn::scaled_sum(l_c, alpha, l_d, beta);
    };

    std::vector<std::pair<std::string, nn::Tensor<double>>> named;
    named.reserve(net.params.size());
    for (const Parameter<double>& p : net.params) named.emplace_back(p.name, p.tensor);
    return nn::gradcheck(closure, named, opts);
}

}  // namespace amcn
