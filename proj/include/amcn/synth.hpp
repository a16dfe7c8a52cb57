#pragma once

#include <cstdint>

#include "amcn/grid.hpp"

namespace amcn {

struct SynthOptions {
    int nrows = 64;
    int ncols = 64;
    int scale = 4;  // coarse-to-fine factor r
    double x_min = 100.0;
    double y_min = 30.0;
    double cell_size = 0.01;
    int n_stations = 36;
    double station_bias = 0.0;   // mm/month added to every station reading
    double station_noise = 0.0;  // std of station reading noise, mm/month
    // Relative amplitude of the fine-scale multiplicative detail that is
    // observable only through the ancillary fields.
    double detail_strength = 0.6;
    // Defects injected into the raw optical fields for the screening and
    // gap-filling stages to remove.
    int n_spikes = 3;
    int n_holes = 5;
};

// Raw field order as written by the scene generator.
inline constexpr std::array<const char*, 7> kRawFieldNames = {
    "dem", "lstd", "lstn", "evi", "nir", "mir", "swir2"};

struct SynthScene {
    GeoGrid hr_precip;
    GeoGrid lr_precip;   // bilinear downsample of hr_precip by the scale factor
    GridStack raw;       // kRawFieldNames order, with injected spikes/holes
    GridStack ancillary; // canonical 9-channel order, screened/filled/derived
    StationSet stations;
};

// Deterministic synthetic scene: skewed nonnegative precipitation built
// from smooth anisotropic bumps, with sub-coarse-scale detail multiplied in
// from fields that also drive the ancillary channels.
SynthScene synth_scene(std::uint64_t seed, const SynthOptions& opt = {});

// The screening / gap-filling / index-derivation stage from raw fields to
// the canonical ancillary stack. Shared by the scene generator and the
// batch preprocessing command so both produce identical stacks.
GridStack derive_ancillary(const GridStack& raw);

}  // namespace amcn
