#pragma once

#include <cstddef>
#include <vector>

#include "amcn/grid.hpp"

namespace amcn {

// Squared Pearson correlation, mean signed error (result - truth) and
// root-mean-square error over a paired sample.
struct Metrics {
    double r2 = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    // False when either field has zero variance and r2 is undefined.
    bool r2_defined = true;
};

Metrics metrics_from_pairs(const std::vector<double>& pred, const std::vector<double>& truth);

// Over the mutually valid pixels of two co-registered grids.
Metrics evaluate_image(const GeoGrid& pred, const GeoGrid& truth);

// Samples the prediction at the stations and compares against the station
// values; stations with missing values or nodata pixels are excluded.
Metrics evaluate_stations(const GeoGrid& pred, const StationSet& stations);

}  // namespace amcn
