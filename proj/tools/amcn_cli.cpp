// Batch command-line surface for the precipitation downscaling toolkit.
// Subcommands: synth, preprocess, train, downscale, calibrate, eval,
// gradcheck. Every run writes its data outputs plus one manifest; partial
// outputs are removed on failure.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric
// failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "amcn/error.hpp"
#include "amcn/gda.hpp"
#include "amcn/grid_io.hpp"
#include "amcn/manifest.hpp"
#include "amcn/metrics.hpp"
#include "amcn/net_check.hpp"
#include "amcn/net_io.hpp"
#include "amcn/parallel.hpp"
#include "amcn/synth.hpp"
#include "amcn/train.hpp"
#include "amcn/version.hpp"

namespace fs = std::filesystem;
using namespace amcn;

namespace {

// Declared outputs of the running command; removed if the command fails.
struct OutputGuard {
    std::vector<std::string> paths;
    bool committed = false;

    std::string track(const std::string& p) {
        paths.push_back(p);
        return p;
    }
    ~OutputGuard() {
        if (committed) return;
        for (const std::string& p : paths) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
};

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    long long ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::string scene_base(const std::string& dir, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%03d", index);
    return (fs::path(dir) / buf).string();
}

struct SceneFiles {
    std::string base;  // path prefix without extension
    std::string name;  // scene name
    bool has_stations = false;
};

std::vector<SceneFiles> discover_scenes(const std::string& dir, const std::string& marker) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<SceneFiles> out;
    const std::string suffix = "." + marker + ".agrid";
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.size() <= suffix.size() ||
            fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) != 0) {
            continue;
        }
        SceneFiles sf;
        sf.name = fname.substr(0, fname.size() - suffix.size());
        sf.base = (fs::path(dir) / sf.name).string();
        sf.has_stations = fs::exists(sf.base + ".stations.csv");
        out.push_back(std::move(sf));
    }
    std::sort(out.begin(), out.end(),
              [](const SceneFiles& a, const SceneFiles& b) { return a.name < b.name; });
    if (out.empty()) {
        throw IoError("no '*" + suffix + "' scene files found in " + dir);
    }
    return out;
}

SceneData load_scene(const SceneFiles& sf) {
    SceneData scene;
    scene.name = sf.name;
    scene.hr_precip = read_single_grid(sf.base + ".hr_precip.agrid");
    scene.lr_precip = read_single_grid(sf.base + ".lr_precip.agrid");
    scene.ancillary = read_grid(sf.base + ".ancillary.agrid");
    if (sf.has_stations) scene.stations = read_stations(sf.base + ".stations.csv");
    return scene;
}

void add_arch_options(CLI::App* cmd, AmcnConfig& arch) {
    cmd->add_option("--channels", arch.base_channels, "feature channels C");
    cmd->add_option("--growth", arch.rdb_growth, "dense-block growth G");
    cmd->add_option("--rdb-layers", arch.rdb_layers, "densely connected layers per block");
    cmd->add_option("--levels", arch.n_levels, "residual module levels");
    cmd->add_option("--kernel", arch.kernel, "convolution kernel size");
    cmd->add_option("--scale", arch.scale_factor, "coarse-to-fine scale factor r");
    cmd->add_flag_callback(
        "--no-gca", [&arch]() { arch.use_gca = false; },
        "disable the global cross-attention module");
    cmd->add_flag_callback(
        "--no-mfca", [&arch]() { arch.use_mfca = false; },
        "disable the multi-factor cross-attention module");
    cmd->add_flag_callback(
        "--no-degradation-loss", [&arch]() { arch.use_degradation_loss = false; },
        "train with the fine-scale loss only");
}

std::string flag_str(bool v) { return v ? "true" : "false"; }

int run_cli(int argc, char** argv) {
    CLI::App app{"satellite precipitation downscaling toolkit"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker thread cap")->capture_default_str();

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
    synth->set_config("--config");
    std::uint64_t synth_seed = 1;
    int synth_scenes = 1;
    SynthOptions sopt;
    std::string synth_out;
    synth->add_option("--seed", synth_seed, "run seed")->capture_default_str();
    synth->add_option("--rows", sopt.nrows, "scene rows")->capture_default_str();
    synth->add_option("--cols", sopt.ncols, "scene cols")->capture_default_str();
    synth->add_option("--scale", sopt.scale, "coarse-to-fine factor")->capture_default_str();
    synth->add_option("--scenes", synth_scenes, "number of scenes")->capture_default_str();
    synth->add_option("--stations", sopt.n_stations, "stations per scene")
        ->capture_default_str();
    synth->add_option("--station-bias", sopt.station_bias, "systematic station offset");
    synth->add_option("--station-noise", sopt.station_noise, "station reading noise std");
    synth->add_option("--out", synth_out, "output directory")->required();

    // ---- preprocess ------------------------------------------------------
    auto* prep =
        app.add_subcommand("preprocess", "derive ancillary index channels from raw scenes");
    prep->set_config("--config");
    std::string prep_in, prep_out;
    prep->add_option("--in", prep_in, "directory with raw scenes")->required();
    prep->add_option("--out", prep_out, "output directory")->required();

    // ---- train -----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train a downscaling model");
    train_cmd->set_config("--config");
    TrainConfig tcfg = desk_train_config();
    std::string train_data, out_model, loss_csv;
    train_cmd->add_option("--data", train_data, "directory with preprocessed scenes")
        ->required();
    train_cmd->add_option("--out-model", out_model, "model output path")->required();
    train_cmd->add_option("--loss-csv", loss_csv, "loss history output path");
    train_cmd->add_option("--epochs", tcfg.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--lr0", tcfg.lr0, "initial learning rate")->capture_default_str();
    train_cmd->add_option("--lr-halving", tcfg.lr_halving_period, "epochs between halvings")
        ->capture_default_str();
    train_cmd->add_option("--batch", tcfg.batch_size, "mini-batch size")->capture_default_str();
    train_cmd->add_option("--patch", tcfg.patch, "training patch size")->capture_default_str();
    train_cmd->add_option("--stride", tcfg.stride, "patch extraction stride")
        ->capture_default_str();
    train_cmd->add_option("--seed", tcfg.seed, "run seed")->capture_default_str();
    add_arch_options(train_cmd, tcfg.arch);

    // ---- downscale -------------------------------------------------------
    auto* down = app.add_subcommand("downscale", "apply a trained model to a coarse raster");
    down->set_config("--config");
    std::string down_model, down_lr, down_anc, down_out;
    down->add_option("--model", down_model, "trained model file")->required();
    down->add_option("--lr-precip", down_lr, "coarse precipitation AGRID")->required();
    down->add_option("--ancillary", down_anc, "9-channel ancillary AGRID")->required();
    down->add_option("--out", down_out, "output raster path")->required();

    // ---- calibrate -------------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "station residual correction");
    cal->set_config("--config");
    std::string cal_in, cal_stations, cal_out, cal_residuals;
    double cal_power = 2.0;
    int cal_neighbors = 12;
    cal->add_option("--in", cal_in, "downscaled raster")->required();
    cal->add_option("--stations", cal_stations, "station CSV")->required();
    cal->add_option("--out", cal_out, "calibrated raster path")->required();
    cal->add_option("--residuals", cal_residuals, "residual table output path");
    cal->add_option("--power", cal_power, "inverse-distance exponent")->capture_default_str();
    cal->add_option("--max-neighbors", cal_neighbors, "stations per pixel")
        ->capture_default_str();

    // ---- eval ------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "compute metrics against truth or stations");
    ev->set_config("--config");
    std::string ev_pred, ev_truth, ev_stations, ev_out;
    ev->add_option("--pred", ev_pred, "prediction raster")->required();
    auto* opt_truth = ev->add_option("--truth", ev_truth, "truth raster");
    auto* opt_st = ev->add_option("--stations", ev_stations, "station CSV");
    ev->add_option("--out", ev_out, "metrics CSV output path")->required();
    opt_truth->excludes(opt_st);

    // ---- gradcheck -------------------------------------------------------
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->set_config("--config");
    AmcnConfig gc_arch = tiny_config();
    int gc_patch = 16, gc_batch = 2;
    std::uint64_t gc_seed = 7;
    nn::GradCheckOptions gc_opt;
    gc->add_option("--patch", gc_patch, "probe patch size")->capture_default_str();
    gc->add_option("--batch", gc_batch, "probe batch size")->capture_default_str();
    gc->add_option("--seed", gc_seed, "probe seed")->capture_default_str();
    gc->add_option("--subsample", gc_opt.subsample,
                   "elements checked above the exhaustive limit")
        ->capture_default_str();
    gc->add_option("--tolerance", gc_opt.tolerance, "max relative error accepted")
        ->capture_default_str();
    add_arch_options(gc, gc_arch);

    CLI11_PARSE(app, argc, argv);
    set_thread_cap(threads);
    Timer timer;

    if (*synth) {
        OutputGuard guard;
        fs::create_directories(synth_out);
        for (int i = 0; i < synth_scenes; ++i) {
            SynthScene scene =
                synth_scene(mix_seed(synth_seed, static_cast<std::uint64_t>(i)), sopt);
            const std::string base = scene_base(synth_out, i);
            write_grid(scene.hr_precip, guard.track(base + ".hr_precip.agrid"), "precip");
            write_grid(scene.lr_precip, guard.track(base + ".lr_precip.agrid"), "precip");
            write_grid(scene.raw, guard.track(base + ".raw.agrid"));
            write_stations(scene.stations, guard.track(base + ".stations.csv"));
        }
        RunManifest mf;
        mf.command = "synth";
        mf.add("seed", static_cast<long long>(synth_seed));
        mf.add("scenes", static_cast<long long>(synth_scenes));
        mf.add("rows", static_cast<long long>(sopt.nrows));
        mf.add("cols", static_cast<long long>(sopt.ncols));
        mf.add("scale", static_cast<long long>(sopt.scale));
        mf.add("stations", static_cast<long long>(sopt.n_stations));
        mf.add("out", synth_out);
        mf.add("wall_time_ms", timer.ms());
        mf.write((fs::path(synth_out) / "manifest.txt").string());
        guard.committed = true;
        return 0;
    }

    if (*prep) {
        OutputGuard guard;
        auto scenes = discover_scenes(prep_in, "raw");
        fs::create_directories(prep_out);
        for (const SceneFiles& sf : scenes) {
            GridStack raw = read_grid(sf.base + ".raw.agrid");
            GridStack ancillary = derive_ancillary(raw);
            const std::string out_base = (fs::path(prep_out) / sf.name).string();
            write_grid(ancillary, guard.track(out_base + ".ancillary.agrid"));
            for (const char* part : {".hr_precip.agrid", ".lr_precip.agrid"}) {
                if (fs::exists(sf.base + part)) {
                    fs::copy_file(sf.base + part, guard.track(out_base + part),
                                  fs::copy_options::overwrite_existing);
                }
            }
            if (sf.has_stations) {
                fs::copy_file(sf.base + ".stations.csv",
                              guard.track(out_base + ".stations.csv"),
                              fs::copy_options::overwrite_existing);
            }
        }
        RunManifest mf;
        mf.command = "preprocess";
        mf.add("in", prep_in);
        mf.add("out", prep_out);
        mf.add("scenes", static_cast<long long>(scenes.size()));
        mf.add("wall_time_ms", timer.ms());
        mf.write((fs::path(prep_out) / "manifest.txt").string());
        guard.committed = true;
        return 0;
    }

    if (*train_cmd) {
        OutputGuard guard;
        if (loss_csv.empty()) loss_csv = out_model + ".loss.csv";
        std::vector<SceneData> scenes;
        for (const SceneFiles& sf : discover_scenes(train_data, "ancillary")) {
            scenes.push_back(load_scene(sf));
        }
        TrainingSet ts = build_training_set(scenes, tcfg);
        AmcnNet<float> net = AmcnNet<float>::random_init(tcfg.arch, tcfg.seed);
        auto history = train(net, ts, tcfg);
        save_model(net, guard.track(out_model));
        write_loss_csv(history, guard.track(loss_csv));
        RunManifest mf;
        mf.command = "train";
        mf.add("data", train_data);
        mf.add("out_model", out_model);
        mf.add("loss_csv", loss_csv);
        mf.add("seed", static_cast<long long>(tcfg.seed));
        mf.add("epochs", static_cast<long long>(tcfg.epochs));
        mf.add("batch", static_cast<long long>(tcfg.batch_size));
        mf.add("patch", static_cast<long long>(tcfg.patch));
        mf.add("stride", static_cast<long long>(tcfg.stride));
        mf.add("lr0", tcfg.lr0);
        mf.add("lr_halving", static_cast<long long>(tcfg.lr_halving_period));
        mf.add("channels", static_cast<long long>(tcfg.arch.base_channels));
        mf.add("growth", static_cast<long long>(tcfg.arch.rdb_growth));
        mf.add("rdb_layers", static_cast<long long>(tcfg.arch.rdb_layers));
        mf.add("levels", static_cast<long long>(tcfg.arch.n_levels));
        mf.add("scale", static_cast<long long>(tcfg.arch.scale_factor));
        mf.add("use_gca", flag_str(tcfg.arch.use_gca));
        mf.add("use_mfca", flag_str(tcfg.arch.use_mfca));
        mf.add("use_degradation_loss", flag_str(tcfg.arch.use_degradation_loss));
        mf.add("patches", static_cast<long long>(ts.patches.size()));
        mf.add("final_loss", history.empty() ? 0.0 : history.back().l_total);
        mf.add("wall_time_ms", timer.ms());
        mf.write(out_model + ".manifest");
        guard.committed = true;
        return 0;
    }

    if (*down) {
        OutputGuard guard;
        AmcnNet<float> net = load_model(down_model);
        GeoGrid lr = read_single_grid(down_lr);
        GridStack anc = read_grid(down_anc);
        GeoGrid result = downscale_grid(net, lr, anc);
        write_grid(result, guard.track(down_out), "precip");
        RunManifest mf;
        mf.command = "downscale";
        mf.add("model", down_model);
        mf.add("lr_precip", down_lr);
        mf.add("ancillary", down_anc);
        mf.add("out", down_out);
        mf.add("wall_time_ms", timer.ms());
        mf.write(down_out + ".manifest");
        guard.committed = true;
        return 0;
    }

    if (*cal) {
        OutputGuard guard;
        GeoGrid raster = read_single_grid(cal_in);
        StationSet stations = read_stations(cal_stations);
        ResidualTable table = station_residuals(raster, stations);
        GeoGrid calibrated = apply_gda(raster, stations, cal_power, cal_neighbors);
        write_grid(calibrated, guard.track(cal_out), "precip");
        if (cal_residuals.empty()) cal_residuals = cal_out + ".residuals.csv";
        write_residual_csv(table, guard.track(cal_residuals));
        RunManifest mf;
        mf.command = "calibrate";
        mf.add("in", cal_in);
        mf.add("stations", cal_stations);
        mf.add("out", cal_out);
        mf.add("residuals", cal_residuals);
        mf.add("power", cal_power);
        mf.add("max_neighbors", static_cast<long long>(cal_neighbors));
        mf.add("stations_used", static_cast<long long>(table.residuals.size()));
        mf.add("stations_skipped", static_cast<long long>(table.skipped));
        mf.add("wall_time_ms", timer.ms());
        mf.write(cal_out + ".manifest");
        guard.committed = true;
        return 0;
    }

    if (*ev) {
        OutputGuard guard;
        if (ev_truth.empty() && ev_stations.empty()) {
            throw InvalidArgument("eval requires --truth or --stations");
        }
        GeoGrid pred = read_single_grid(ev_pred);
        Metrics m;
        std::string kind;
        if (!ev_truth.empty()) {
            m = evaluate_image(pred, read_single_grid(ev_truth));
            kind = "image";
        } else {
            m = evaluate_stations(pred, read_stations(ev_stations));
            kind = "station";
        }
        {
            std::ofstream os(guard.track(ev_out), std::ios::binary);
            if (!os) throw IoError("cannot open for writing: " + ev_out);
            char buf[256];
            os << "kind,n,r2,bias,rmse\n";
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g\n", kind.c_str(), m.n,
                          m.r2, m.bias, m.rmse);
            os << buf;
        }
        char line[256];
        std::snprintf(line, sizeof(line), "%s metrics: n=%zu R2=%.4f bias=%.4f rmse=%.4f\n",
                      kind.c_str(), m.n, m.r2, m.bias, m.rmse);
        std::cout << line;
        RunManifest mf;
        mf.command = "eval";
        mf.add("pred", ev_pred);
        mf.add("reference", ev_truth.empty() ? ev_stations : ev_truth);
        mf.add("kind", kind);
        mf.add("out", ev_out);
        mf.add("wall_time_ms", timer.ms());
        mf.write(ev_out + ".manifest");
        guard.committed = true;
        return 0;
    }

    if (*gc) {
        auto report = amcn_gradcheck(gc_arch, gc_patch, gc_batch, gc_seed, gc_opt);
        char line[256];
        std::snprintf(line, sizeof(line),
                      "gradcheck: checked=%zu max_rel_err=%.3e worst=%s[%zu] "
                      "(analytic=%.6e numeric=%.6e)\n",
                      report.n_checked, report.max_rel_err, report.worst.param.c_str(),
                      report.worst.index, report.worst.analytic, report.worst.numeric);
        std::cout << line;
        if (!report.passed(gc_opt.tolerance)) {
            throw NumericError("gradient check failed above tolerance");
        }
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
}
