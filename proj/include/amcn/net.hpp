#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "amcn/error.hpp"
#include "amcn/grid.hpp"
#include "amcn/nn/gradcheck.hpp"
#include "amcn/nn/loss.hpp"
#include "amcn/nn/ops.hpp"
#include "amcn/nn/tensor.hpp"
#include "amcn/preprocess.hpp"
#include "amcn/rng.hpp"

namespace amcn {

// Architecture hyperparameters. The attention switches and the degradation
// switch drive the ablation experiments.
struct AmcnConfig {
    int base_channels = 32;  // C
    int n_ancillary = 9;
    int scale_factor = 10;  // r
    int rdb_layers = 6;
    int rdb_growth = 16;  // G
    int n_levels = 3;
    int kernel = 3;
    bool use_gca = true;
    bool use_mfca = true;
    bool use_degradation_loss = true;

    void validate() const {
        if (base_channels < 1 || rdb_growth < 1 || rdb_layers < 1 || n_levels < 1) {
            throw InvalidArgument("network widths and depths must be positive");
        }
        if (n_ancillary != 9) {
            throw InvalidArgument("the predictor set has exactly 9 ancillary channels");
        }
        if (scale_factor < 2) throw InvalidArgument("scale factor must be at least 2");
        if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("kernel must be odd");
    }
};

// Small configuration for the 64-bit finite-difference check.
inline AmcnConfig tiny_config() {
    AmcnConfig c;
    c.base_channels = 8;
    c.scale_factor = 4;
    c.rdb_layers = 3;
    c.rdb_growth = 8;
    c.n_levels = 2;
    return c;
}

// Desk-scale configuration used by the synthetic training suite. Narrow
// enough that the full suite (several trainings over 20 scenes) fits in a
// few minutes on one core.
inline AmcnConfig desk_config() {
    AmcnConfig c;
    c.base_channels = 8;
    c.scale_factor = 4;
    c.rdb_layers = 3;
    c.rdb_growth = 8;
    c.n_levels = 2;
    return c;
}

template <typename T>
struct Parameter {
    std::string name;
    nn::Tensor<T> tensor;
};

template <typename T>
struct AmcnForward {
    nn::Tensor<T> pred_hr;  // mm/month, HR grid
    nn::Tensor<T> xi_norm;  // residual in normalized precipitation units
    nn::Tensor<T> up_norm;  // normalized upsampled precipitation
};

namespace detail_net {

inline NormStats identity_stats(int nchannels) {
    NormStats s;
    s.mean.assign(static_cast<std::size_t>(nchannels), 0.0);
    s.std_dev.assign(static_cast<std::size_t>(nchannels), 1.0);
    return s;
}

}  // namespace detail_net

// The full parameter set plus architecture hyperparameters and the input
// normalization statistics (canonical 10-channel order).
template <typename T>
class AmcnNet {
public:
    AmcnConfig config;
    NormStats norm_stats;
    std::vector<Parameter<T>> params;

    // Builds the parameter set in a fixed order with seeded He-uniform
    // initialization; the reconstruction convolution starts at zero so an
    // untrained model reproduces plain bilinear upsampling.
    static AmcnNet random_init(const AmcnConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        AmcnNet net;
        net.config = cfg;
        net.norm_stats =
            detail_net::identity_stats(cfg.n_ancillary + 1);
        Rng rng(mix_seed(seed, 0x416d636eULL));
        const int C = cfg.base_channels;
        const int k = cfg.kernel;

        auto add_conv = [&](const std::string& name, int cout, int cin, int kk, bool zero) {
            net.add_param(name + ".w", nn::Shape{cout, cin, kk, kk}, rng, zero);
            net.add_param(name + ".b", nn::Shape{cout}, rng, true);
        };

        add_conv("embed.precip", C, 1, k, false);
        const bool no_attention = !cfg.use_gca && !cfg.use_mfca;
        if (cfg.use_gca || no_attention) {
            add_conv("embed.anc_joint", C, cfg.n_ancillary, k, false);
        }
        if (cfg.use_gca) {
            add_conv("gca.hasa_feat", C, C, k, false);
            add_conv("gca.hasa_gate", C, C, k, false);
            add_conv("gca.lpca_feat", C, C, k, false);
            add_conv("gca.lpca_gate", C, C, k, false);
        }
        if (cfg.use_mfca) {
            for (int f = 0; f < cfg.n_ancillary; ++f) {
                add_conv("embed.anc_factor" + std::to_string(f), C, 1, k, false);
            }
            for (int f = 0; f < cfg.n_ancillary; ++f) {
                const std::string base = "mfca.sfca" + std::to_string(f);
                add_conv(base + ".hasa_feat", C, C, k, false);
                add_conv(base + ".hasa_gate", C, C, k, false);
                add_conv(base + ".lpca_feat", C, C, k, false);
                add_conv(base + ".lpca_gate", C, C, k, false);
            }
            add_conv("mfca.project", C, cfg.n_ancillary * C, 1, false);
        }
        const int cascade_in = no_attention ? 2 : (cfg.use_gca ? 1 : 0) + (cfg.use_mfca ? 1 : 0);
        add_conv("cascade.project", C, cascade_in * C, 1, false);
        for (int l = 0; l < cfg.n_levels; ++l) {
            const std::string lvl = "rdam.level" + std::to_string(l);
            for (int j = 0; j < cfg.rdb_layers; ++j) {
                add_conv(lvl + ".rdb.layer" + std::to_string(j), cfg.rdb_growth,
                         C + j * cfg.rdb_growth, k, false);
            }
            add_conv(lvl + ".rdb.fuse", C, C + cfg.rdb_layers * cfg.rdb_growth, 1, false);
            net.add_param(lvl + ".rab.fc.w", nn::Shape{C, C}, rng, false);
            net.add_param(lvl + ".rab.fc.b", nn::Shape{C}, rng, true);
            add_conv(lvl + ".rab.spatial", 1, C, k, false);
            add_conv(lvl + ".rab.out", C, C, k, false);
        }
        add_conv("rdam.fuse", C, cfg.n_levels * C, 1, false);
        add_conv("reconstruct", 1, C, k, true);
        return net;
    }

    const nn::Tensor<T>& param(std::string_view name) const {
        for (const Parameter<T>& p : params) {
            if (p.name == name) return p.tensor;
        }
        throw InvalidArgument("unknown parameter: " + std::string(name));
    }
    nn::Tensor<T>& param(std::string_view name) {
        for (Parameter<T>& p : params) {
            if (p.name == name) return p.tensor;
        }
        throw InvalidArgument("unknown parameter: " + std::string(name));
    }

    std::vector<nn::Tensor<T>> param_tensors() const {
        std::vector<nn::Tensor<T>> out;
        out.reserve(params.size());
        for (const Parameter<T>& p : params) out.push_back(p.tensor);
        return out;
    }

    // Eq-style cross-attention block: the precipitation features weighted by
    // a sigmoid gate from the ancillary features, plus the mirror image,
    // fused by element-wise addition. No pooling anywhere in the block.
    nn::Tensor<T> croa_block(const nn::Tensor<T>& f_p, const nn::Tensor<T>& f_a,
                             const std::string& base) const {
        const int pad = (config.kernel - 1) / 2;
        auto hasa = nn::elementwise_mul(
            nn::conv2d(f_p, param(base + ".hasa_feat.w"), param(base + ".hasa_feat.b"), pad),
            nn::sigmoid(
                nn::conv2d(f_a, param(base + ".hasa_gate.w"), param(base + ".hasa_gate.b"), pad)));
        auto lpca = nn::elementwise_mul(
            nn::conv2d(f_a, param(base + ".lpca_feat.w"), param(base + ".lpca_feat.b"), pad),
            nn::sigmoid(
                nn::conv2d(f_p, param(base + ".lpca_gate.w"), param(base + ".lpca_gate.b"), pad)));
        return nn::add(hasa, lpca);
    }

    // Joint recalibration of the precipitation features against all nine
    // ancillary channels embedded as one stream.
    nn::Tensor<T> gca_forward(const nn::Tensor<T>& precip_feat,
                              const nn::Tensor<T>& ancillary_joint_feat) const {
        return croa_block(precip_feat, ancillary_joint_feat, "gca");
    }

    // Nine per-factor cross-attention blocks with distinct parameters,
    // concatenated and projected back to C channels.
    nn::Tensor<T> mfca_forward(const nn::Tensor<T>& precip_feat,
                               const std::vector<nn::Tensor<T>>& per_factor_feats) const {
        if (static_cast<int>(per_factor_feats.size()) != config.n_ancillary) {
            throw DimensionError("mfca: wrong ancillary factor count");
        }
        std::vector<nn::Tensor<T>> outs;
        outs.reserve(per_factor_feats.size());
        for (std::size_t f = 0; f < per_factor_feats.size(); ++f) {
            outs.push_back(
                croa_block(precip_feat, per_factor_feats[f], "mfca.sfca" + std::to_string(f)));
        }
        auto cat = nn::concat_channels(outs);
        return nn::conv2d(cat, param("mfca.project.w"), param("mfca.project.b"), 0);
    }

    // Densely connected convolutions with local fusion and a residual skip.
    nn::Tensor<T> rdb_forward(const nn::Tensor<T>& x, const std::string& base) const {
        const int pad = (config.kernel - 1) / 2;
        std::vector<nn::Tensor<T>> feats{x};
        for (int j = 0; j < config.rdb_layers; ++j) {
            auto in = feats.size() == 1 ? feats.front() : nn::concat_channels(feats);
            const std::string layer = base + ".layer" + std::to_string(j);
            feats.push_back(
                nn::relu(nn::conv2d(in, param(layer + ".w"), param(layer + ".b"), pad)));
        }
        auto fused = nn::conv2d(nn::concat_channels(feats), param(base + ".fuse.w"),
                                param(base + ".fuse.b"), 0);
        return nn::add(x, fused);
    }

    // Channel gate (pool + FC + sigmoid) and spatial gate (conv + sigmoid)
    // combined additively, then a local residual.
    nn::Tensor<T> rab_forward(const nn::Tensor<T>& x, const std::string& base) const {
        const int pad = (config.kernel - 1) / 2;
        auto channel_gate =
            nn::sigmoid(nn::fully_connected(nn::global_avg_pool(x), param(base + ".fc.w"),
                                            param(base + ".fc.b")));
        auto f_ca = nn::mul_channel_gate(x, channel_gate);
        auto spatial_gate = nn::sigmoid(
            nn::conv2d(x, param(base + ".spatial.w"), param(base + ".spatial.b"), pad));
        auto f_sa = nn::mul_spatial_gate(x, spatial_gate);
        auto merged = nn::add(f_ca, f_sa);
        return nn::add(x, nn::conv2d(merged, param(base + ".out.w"), param(base + ".out.b"), pad));
    }

    // n_levels of RDB -> RAB in sequence; the level outputs are concatenated
    // and fused back to C channels.
    nn::Tensor<T> rdam_forward(const nn::Tensor<T>& x) const {
        std::vector<nn::Tensor<T>> level_outputs;
        nn::Tensor<T> cur = x;
        for (int l = 0; l < config.n_levels; ++l) {
            const std::string lvl = "rdam.level" + std::to_string(l);
            cur = rab_forward(rdb_forward(cur, lvl + ".rdb"), lvl + ".rab");
            level_outputs.push_back(cur);
        }
        auto cat = level_outputs.size() == 1 ? level_outputs.front()
                                             : nn::concat_channels(level_outputs);
        return nn::conv2d(cat, param("rdam.fuse.w"), param("rdam.fuse.b"), 0);
    }

    // Global-residual reconstruction from a precomputed upsampled
    // precipitation field (raw mm/month) and the raw ancillary stack.
    AmcnForward<T> forward_from_up(const nn::Tensor<T>& up_raw,
                                   const nn::Tensor<T>& anc_raw) const {
        if (up_raw.shape().size() != 4 || up_raw.dim(1) != 1) {
            throw DimensionError("forward: upsampled precipitation must be (B,1,H,W)");
        }
        if (anc_raw.shape().size() != 4 || anc_raw.dim(1) != config.n_ancillary) {
            throw DimensionError("forward: ancillary stack must have 9 channels");
        }
        if (anc_raw.dim(0) != up_raw.dim(0) || anc_raw.dim(2) != up_raw.dim(2) ||
            anc_raw.dim(3) != up_raw.dim(3)) {
            throw DimensionError("forward: precipitation/ancillary extent mismatch");
        }
        const int pad = (config.kernel - 1) / 2;
        const double mu0 = norm_stats.mean[0];
        const double sd0 = norm_stats.std_dev[0];

        auto up_n = nn::affine(up_raw, static_cast<T>(1.0 / sd0), static_cast<T>(-mu0 / sd0));
        std::vector<T> anc_scale, anc_shift;
        for (int ch = 1; ch <= config.n_ancillary; ++ch) {
            const double m = norm_stats.mean[static_cast<std::size_t>(ch)];
            const double s = norm_stats.std_dev[static_cast<std::size_t>(ch)];
            anc_scale.push_back(static_cast<T>(1.0 / s));
            anc_shift.push_back(static_cast<T>(-m / s));
        }
        auto anc_n = nn::channel_affine(anc_raw, std::move(anc_scale), std::move(anc_shift));

        auto f_p = nn::conv2d(up_n, param("embed.precip.w"), param("embed.precip.b"), pad);
        std::vector<nn::Tensor<T>> cascade;
        const bool no_attention = !config.use_gca && !config.use_mfca;
        if (config.use_gca || no_attention) {
            auto f_a_joint =
                nn::conv2d(anc_n, param("embed.anc_joint.w"), param("embed.anc_joint.b"), pad);
            if (config.use_gca) {
                cascade.push_back(gca_forward(f_p, f_a_joint));
            } else {
                // With both attention modules disabled the embedded streams
                // feed the cascade directly.
                cascade.push_back(f_p);
                cascade.push_back(f_a_joint);
            }
        }
        if (config.use_mfca) {
            std::vector<nn::Tensor<T>> factor_feats;
            factor_feats.reserve(static_cast<std::size_t>(config.n_ancillary));
            for (int f = 0; f < config.n_ancillary; ++f) {
                const std::string name = "embed.anc_factor" + std::to_string(f);
                factor_feats.push_back(nn::conv2d(nn::slice_channels(anc_n, f, f + 1),
                                                  param(name + ".w"), param(name + ".b"), pad));
            }
            cascade.push_back(mfca_forward(f_p, factor_feats));
        }
        auto cascade_in = cascade.size() == 1 ? cascade.front() : nn::concat_channels(cascade);
        auto fused =
            nn::conv2d(cascade_in, param("cascade.project.w"), param("cascade.project.b"), 0);
        auto deep = rdam_forward(fused);
        auto xi_n = nn::conv2d(deep, param("reconstruct.w"), param("reconstruct.b"), pad);

        AmcnForward<T> out;
        out.xi_norm = xi_n;
        out.up_norm = up_n;
        // The residual is denormalized by the precipitation std only, so a
        // zero residual leaves the bilinear term untouched.
        out.pred_hr = nn::add(up_raw, nn::scale(xi_n, static_cast<T>(sd0)));
        return out;
    }

    // Upsamples the coarse precipitation internally by the configured factor.
    AmcnForward<T> forward(const nn::Tensor<T>& lr_raw, const nn::Tensor<T>& anc_raw) const {
        if (lr_raw.shape().size() != 4 || lr_raw.dim(1) != 1) {
            throw DimensionError("forward: coarse precipitation must be (B,1,h,w)");
        }
        if (anc_raw.shape().size() != 4 ||
            anc_raw.dim(2) != lr_raw.dim(2) * config.scale_factor ||
            anc_raw.dim(3) != lr_raw.dim(3) * config.scale_factor) {
            throw DimensionError("forward: ancillary extent does not match scale factor");
        }
        return forward_from_up(nn::bilinear_upsample(lr_raw, config.scale_factor), anc_raw);
    }

private:
    void add_param(std::string name, nn::Shape shape, Rng& rng, bool zero) {
        for (const Parameter<T>& p : params) {
            if (p.name == name) throw InvalidArgument("duplicate parameter name: " + name);
        }
        const std::size_t n = nn::numel(shape);
        std::vector<T> v(n, T(0));
        if (!zero) {
            // He-uniform over the receptive field.
            std::size_t fan_in = 1;
            for (std::size_t d = 1; d < shape.size(); ++d)
                fan_in *= static_cast<std::size_t>(shape[d]);
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
            for (std::size_t i = 0; i < n; ++i)
                v[i] = static_cast<T>(uniform(rng, -limit, limit));
        }
        params.push_back({std::move(name), nn::Tensor<T>::leaf(std::move(shape), std::move(v), true)});
    }
};

// Exact widening of a stored float model for 64-bit runs.
inline AmcnNet<double> widen(const AmcnNet<float>& net) {
    AmcnNet<double> out;
    out.config = net.config;
    out.norm_stats = net.norm_stats;
    out.params.reserve(net.params.size());
    for (const Parameter<float>& p : net.params) {
        std::vector<double> v(p.tensor.values().begin(), p.tensor.values().end());
        out.params.push_back(
            {p.name, nn::Tensor<double>::leaf(p.tensor.shape(), std::move(v), true)});
    }
    return out;
}

}  // namespace amcn
