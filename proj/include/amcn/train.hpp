#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amcn/grid.hpp"
#include "amcn/metrics.hpp"
#include "amcn/net.hpp"
#include "amcn/preprocess.hpp"

namespace amcn {

// One co-registered scene: HR precipitation truth, the coarse input, the
// canonical ancillary stack and optional stations.
struct SceneData {
    std::string name;
    GeoGrid hr_precip;
    GeoGrid lr_precip;
    GridStack ancillary;
    StationSet stations;
};

struct TrainConfig {
    int epochs = 100;
    double lr0 = 0.001;
    int lr_halving_period = 50;
    int batch_size = 64;
    int patch = 40;
    int stride = 40;
    std::uint64_t seed = 1;
    AmcnConfig arch;  // carries the scale factor and the ablation switches

    void validate() const;
};

// Desk-scale settings: small scenes and a narrow network so the whole
// synthetic suite trains in minutes on one core.
TrainConfig desk_train_config();

struct TrainingSet {
    std::vector<PatchPair> patches;
    NormStats stats;
};

// Assembles the canonical 10-channel input per scene (upsampled coarse
// precipitation plus the nine ancillary channels), cuts patches, drops the
// invalid ones and fits normalization statistics.
TrainingSet build_training_set(const std::vector<SceneData>& scenes, const TrainConfig& cfg);

struct LossRow {
    int epoch = 0;
    int iteration = 0;
    double l_c = 0.0;
    double l_d = 0.0;
    double alpha = 1.0;
    double beta = 0.0;
    double l_total = 0.0;
};

// Shuffled mini-batch training with Adam and the halving learning-rate
// schedule. Deterministic for a fixed seed. Sets net.norm_stats from the
// training set. Throws NumericError if the loss turns non-finite.
std::vector<LossRow> train(AmcnNet<float>& net, const TrainingSet& ts, const TrainConfig& cfg);

void write_loss_csv(const std::vector<LossRow>& history, const std::string& path);

// Held-out evaluation: the HR truth is downsampled by r, run through the
// model, and compared against the truth, the stations and the bilinear
// baseline. Also reports the coarse-scale consistency of the prediction.
struct SceneEvaluation {
    std::string name;
    Metrics image;
    Metrics baseline_image;
    std::optional<Metrics> station;
    std::optional<Metrics> baseline_station;
    double degradation_rmse = 0.0;           // rmse(f_d(pred), lr input)
    double baseline_degradation_rmse = 0.0;  // same for the bilinear baseline
};

struct ExperimentReport {
    std::vector<SceneEvaluation> scenes;
    Metrics pooled_image;
    Metrics pooled_baseline_image;
    double pooled_degradation_rmse = 0.0;
    double pooled_baseline_degradation_rmse = 0.0;
};

ExperimentReport simulated_experiment(const AmcnNet<float>& net,
                                      const std::vector<SceneData>& test_scenes);

void write_experiment_csv(const ExperimentReport& report, const std::string& path);
std::string format_experiment_table(const ExperimentReport& report);

}  // namespace amcn
