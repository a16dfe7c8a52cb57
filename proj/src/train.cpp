#include "amcn/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "amcn/error.hpp"
#include "amcn/net_io.hpp"
#include "amcn/nn/adam.hpp"
#include "amcn/nn/loss.hpp"
#include "amcn/rng.hpp"

namespace amcn {

void TrainConfig::validate() const {
    arch.validate();
    if (epochs < 1 || batch_size < 1 || patch < 1 || stride < 1 || lr_halving_period < 1) {
        throw InvalidArgument("training configuration fields must be positive");
    }
    if (!(lr0 > 0.0)) throw InvalidArgument("initial learning rate must be positive");
    if (patch % arch.scale_factor != 0) {
        throw InvalidArgument("patch size must be divisible by the scale factor");
    }
}

TrainConfig desk_train_config() {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.patch = 32;
    cfg.stride = 32;
    cfg.arch = desk_config();
    return cfg;
}

TrainingSet build_training_set(const std::vector<SceneData>& scenes, const TrainConfig& cfg) {
    cfg.validate();
    const int r = cfg.arch.scale_factor;
    const auto expected = canonical_ancillary_names();
    TrainingSet ts;
    for (const SceneData& scene : scenes) {
        scene.ancillary.validate();
        if (scene.ancillary.channel_names != expected) {
            throw FormatError("scene '" + scene.name +
                              "': ancillary channels are not in canonical order");
        }
        GeoGrid up = bilinear_resample(scene.lr_precip, r, 1);
        if (!up.same_geometry(scene.hr_precip)) {
            throw DimensionError("scene '" + scene.name +
                                 "': coarse grid does not upsample onto the HR grid");
        }
        std::vector<GeoGrid> channels{up};
        for (const GeoGrid& ch : scene.ancillary.channels) channels.push_back(ch);
        std::vector<std::string> names(kCanonicalChannelNames.begin(),
                                       kCanonicalChannelNames.end());
        GridStack input = GridStack::create(std::move(channels), std::move(names));
        auto patches = extract_patches(input, scene.hr_precip, scene.lr_precip, cfg.patch,
                                       cfg.stride);
        for (PatchPair& p : patches) ts.patches.push_back(std::move(p));
    }
    if (ts.patches.empty()) {
        throw InvalidArgument("no valid patches could be extracted from the scenes");
    }
    ts.stats = fit_norm_stats(ts.patches);
    return ts;
}

namespace {

// Flattened training sample in raw units; normalization happens inside the
// network and in the loss targets.
struct Sample {
    std::vector<float> up_raw;        // p*p, channel 0 of the input stack
    std::vector<float> anc_raw;       // 9*p*p
    std::vector<float> target_res_n;  // (label - up) / sigma0
    std::vector<float> lr_n;          // (lr - mu0) / sigma0
};

}  // namespace

std::vector<LossRow> train(AmcnNet<float>& net, const TrainingSet& ts, const TrainConfig& cfg) {
    cfg.validate();
    if (ts.patches.empty()) throw InvalidArgument("empty training set");
    if (ts.stats.nchannels() != net.config.n_ancillary + 1) {
        throw DimensionError("normalization statistics do not match the channel count");
    }
    net.norm_stats = ts.stats;

    const int r = net.config.scale_factor;
    const int p = ts.patches.front().label.nrows;
    const int lp = p / r;
    const double mu0 = ts.stats.mean[0];
    const double sd0 = ts.stats.std_dev[0];
    const int nanc = net.config.n_ancillary;

    std::vector<Sample> samples;
    samples.reserve(ts.patches.size());
    for (const PatchPair& pp : ts.patches) {
        if (pp.input.nchannels() != nanc + 1) {
            throw DimensionError("patch stack does not have 10 channels");
        }
        Sample s;
        s.up_raw = pp.input.channel(0).values;
        s.anc_raw.reserve(static_cast<std::size_t>(nanc) * pp.label.size());
        for (int ch = 1; ch <= nanc; ++ch) {
            const auto& v = pp.input.channel(ch).values;
            s.anc_raw.insert(s.anc_raw.end(), v.begin(), v.end());
        }
        s.target_res_n.resize(pp.label.size());
        for (std::size_t i = 0; i < pp.label.size(); ++i) {
            s.target_res_n[i] =
                static_cast<float>((pp.label.values[i] - s.up_raw[i]) / sd0);
        }
        s.lr_n.resize(pp.lr.size());
        for (std::size_t i = 0; i < pp.lr.size(); ++i) {
            s.lr_n[i] = static_cast<float>((pp.lr.values[i] - mu0) / sd0);
        }
        samples.push_back(std::move(s));
    }

    const int B = cfg.batch_size;
    const std::size_t iters_per_epoch = samples.size() / static_cast<std::size_t>(B);
    if (iters_per_epoch == 0) {
        throw InvalidArgument("batch size exceeds the number of training patches");
    }

    nn::Adam<float> adam;
    auto params = net.param_tensors();
    adam.register_parameters(params);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x7368756646ULL));
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const std::size_t plane = static_cast<std::size_t>(p) * p;
    const std::size_t lr_plane = static_cast<std::size_t>(lp) * lp;
    std::vector<LossRow> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs) * iters_per_epoch);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        const double lr_now = nn::scheduled_learning_rate(cfg.lr0, cfg.lr_halving_period, epoch);
        for (std::size_t it = 0; it < iters_per_epoch; ++it) {
            std::vector<float> up_b(static_cast<std::size_t>(B) * plane);
            std::vector<float> anc_b(static_cast<std::size_t>(B) * nanc * plane);
            std::vector<float> tgt_b(static_cast<std::size_t>(B) * plane);
            std::vector<float> lr_b(static_cast<std::size_t>(B) * lr_plane);
            for (int bi = 0; bi < B; ++bi) {
                const Sample& s = samples[order[it * static_cast<std::size_t>(B) + bi]];
                std::copy(s.up_raw.begin(), s.up_raw.end(),
                          up_b.begin() + static_cast<std::ptrdiff_t>(bi * plane));
                std::copy(s.anc_raw.begin(), s.anc_raw.end(),
                          anc_b.begin() + static_cast<std::ptrdiff_t>(bi * nanc * plane));
                std::copy(s.target_res_n.begin(), s.target_res_n.end(),
                          tgt_b.begin() + static_cast<std::ptrdiff_t>(bi * plane));
                std::copy(s.lr_n.begin(), s.lr_n.end(),
                          lr_b.begin() + static_cast<std::ptrdiff_t>(bi * lr_plane));
            }
            auto up_t = nn::Tensor<float>::leaf({B, 1, p, p}, std::move(up_b));
            auto anc_t = nn::Tensor<float>::leaf({B, nanc, p, p}, std::move(anc_b));
            auto tgt_t = nn::Tensor<float>::leaf({B, 1, p, p}, std::move(tgt_b));

            LossRow row;
            row.epoch = epoch;
            row.iteration = static_cast<int>(it);
            try {
                AmcnForward<float> fwd = net.forward_from_up(up_t, anc_t);
                auto l_c = nn::charbonnier_loss(fwd.xi_norm, tgt_t,
                                                nn::kLossEpsilon);
                nn::Tensor<float> total;
                if (net.config.use_degradation_loss) {
                    auto lr_t = nn::Tensor<float>::leaf({B, 1, lp, lp}, std::move(lr_b));
                    auto pred_n = nn::add(fwd.up_norm, fwd.xi_norm);
                    auto l_d = nn::degradation_loss(lr_t, pred_n, nn::kLossEpsilon, r);
                    auto [tot, rep] = nn::total_loss(l_c, l_d);
                    total = tot;
                    row.l_c = rep.l_c;
                    row.l_d = rep.l_d;
                    row.alpha = rep.alpha;
                    row.beta = rep.beta;
                    row.l_total = rep.l_total;
                } else {
                    total = l_c;
                    row.l_c = l_c.item();
                    row.l_d = 0.0;
                    row.alpha = 1.0;
                    row.beta = 0.0;
                    row.l_total = row.l_c;
                }
                if (!std::isfinite(row.l_total)) {
                    throw NumericError("loss is not finite");
                }
                total.backward();
                adam.step(params, lr_now);
            } catch (const NumericError& e) {
                throw NumericError("training aborted at epoch " + std::to_string(epoch) +
                                   " iteration " + std::to_string(it) + ": " + e.what());
            }
            history.push_back(row);
        }
    }
    return history;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_loss_csv(const std::vector<LossRow>& history, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "epoch,iteration,L_c,L_d,alpha,beta,L_total\n";
    for (const LossRow& r : history) {
        os << r.epoch << ',' << r.iteration << ',' << fmt(r.l_c) << ',' << fmt(r.l_d) << ','
           << fmt(r.alpha) << ',' << fmt(r.beta) << ',' << fmt(r.l_total) << '\n';
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

ExperimentReport simulated_experiment(const AmcnNet<float>& net,
                                      const std::vector<SceneData>& test_scenes) {
    if (test_scenes.empty()) throw InvalidArgument("no test scenes");
    const int r = net.config.scale_factor;
    ExperimentReport rep;
    std::vector<double> pooled_pred, pooled_base, pooled_truth;
    std::vector<double> pooled_down_pred, pooled_down_base, pooled_down_lr;

    for (const SceneData& scene : test_scenes) {
        GeoGrid lr = bilinear_resample(scene.hr_precip, 1, r);
        GeoGrid pred = downscale_grid(net, lr, scene.ancillary);
        GeoGrid baseline = bilinear_resample(lr, r, 1);

        SceneEvaluation ev;
        ev.name = scene.name;
        ev.image = evaluate_image(pred, scene.hr_precip);
        ev.baseline_image = evaluate_image(baseline, scene.hr_precip);
        if (scene.stations.size() >= 2) {
            ev.station = evaluate_stations(pred, scene.stations);
            ev.baseline_station = evaluate_stations(baseline, scene.stations);
        }
        GeoGrid down_pred = bilinear_resample(pred, 1, r);
        GeoGrid down_base = bilinear_resample(baseline, 1, r);
        ev.degradation_rmse = evaluate_image(down_pred, lr).rmse;
        ev.baseline_degradation_rmse = evaluate_image(down_base, lr).rmse;
        rep.scenes.push_back(std::move(ev));

        for (std::size_t i = 0; i < pred.values.size(); ++i) {
            if (pred.values[i] == pred.nodata ||
                scene.hr_precip.values[i] == scene.hr_precip.nodata) {
                continue;
            }
            pooled_pred.push_back(pred.values[i]);
            pooled_base.push_back(baseline.values[i]);
            pooled_truth.push_back(scene.hr_precip.values[i]);
        }
        for (std::size_t i = 0; i < lr.values.size(); ++i) {
            pooled_down_pred.push_back(down_pred.values[i]);
            pooled_down_base.push_back(down_base.values[i]);
            pooled_down_lr.push_back(lr.values[i]);
        }
    }
    rep.pooled_image = metrics_from_pairs(pooled_pred, pooled_truth);
    rep.pooled_baseline_image = metrics_from_pairs(pooled_base, pooled_truth);
    rep.pooled_degradation_rmse = metrics_from_pairs(pooled_down_pred, pooled_down_lr).rmse;
    rep.pooled_baseline_degradation_rmse =
        metrics_from_pairs(pooled_down_base, pooled_down_lr).rmse;
    return rep;
}

void write_experiment_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "scene,kind,n,r2,bias,rmse,degradation_rmse\n";
    auto line = [&](const std::string& scene, const std::string& kind, const Metrics& m,
                    double deg) {
        os << scene << ',' << kind << ',' << m.n << ',' << (m.r2_defined ? fmt(m.r2) : "") << ','
           << fmt(m.bias) << ',' << fmt(m.rmse) << ',' << fmt(deg) << '\n';
    };
    for (const SceneEvaluation& ev : report.scenes) {
        line(ev.name, "image", ev.image, ev.degradation_rmse);
        line(ev.name, "image_baseline", ev.baseline_image, ev.baseline_degradation_rmse);
        if (ev.station) line(ev.name, "station", *ev.station, 0.0);
        if (ev.baseline_station) line(ev.name, "station_baseline", *ev.baseline_station, 0.0);
    }
    line("pooled", "image", report.pooled_image, report.pooled_degradation_rmse);
    line("pooled", "image_baseline", report.pooled_baseline_image,
         report.pooled_baseline_degradation_rmse);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

std::string format_experiment_table(const ExperimentReport& report) {
    std::ostringstream os;
    char buf[256];
    os << "scene              kind              n        R2      bias      rmse\n";
    auto line = [&](const std::string& scene, const std::string& kind, const Metrics& m) {
        std::snprintf(buf, sizeof(buf), "%-18s %-15s %7zu %9.4f %9.3f %9.3f\n", scene.c_str(),
                      kind.c_str(), m.n, m.r2_defined ? m.r2 : std::nan(""), m.bias, m.rmse);
        os << buf;
    };
    for (const SceneEvaluation& ev : report.scenes) {
        line(ev.name, "image", ev.image);
        line(ev.name, "bilinear", ev.baseline_image);
        if (ev.station) line(ev.name, "station", *ev.station);
    }
    line("pooled", "image", report.pooled_image);
    line("pooled", "bilinear", report.pooled_baseline_image);
    return os.str();
}

}  // namespace amcn
