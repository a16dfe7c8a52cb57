#pragma once

#include <vector>

#include "amcn/grid.hpp"

namespace amcn {

// Wet/dry edge lines of the LST-EVI triangle space, fitted per scene.
struct EdgeFit {
    double wet_intercept = 0.0;
    double wet_slope = 0.0;
    double dry_intercept = 0.0;
    double dry_slope = 0.0;
    int n_bins = 0;

    double wet(double evi) const { return wet_intercept + wet_slope * evi; }
    double dry(double evi) const { return dry_intercept + dry_slope * evi; }
};

// Bins valid pixels into equal-width EVI bins, takes the per-bin LST
// extrema as edge points and fits least-squares lines through them.
// Throws NumericError when fewer than 2 bins are populated, when the fit
// is degenerate, or when the dry edge does not lie above the wet edge
// over the observed EVI range.
EdgeFit fit_tvdi_edges(const GeoGrid& lst, const GeoGrid& evi, int n_bins = 20);

// (T_s - T_wet(EVI)) / (T_dry(EVI) - T_wet(EVI)), clamped to [0, 1].
GeoGrid compute_tvdi(const GeoGrid& lst, const GeoGrid& evi, const EdgeFit& edges);

// (nir - mir) / (nir + mir); near-zero denominators become nodata.
GeoGrid compute_ndwi(const GeoGrid& nir, const GeoGrid& mir);

// (nir - swir2) / (nir + swir2); near-zero denominators become nodata.
GeoGrid compute_lswi(const GeoGrid& nir, const GeoGrid& swir2);

// Marks pixels deviating from the mean of their surrounding window
// (center excluded) by more than k standard deviations as nodata.
GeoGrid screen_outliers(const GeoGrid& grid, int window = 3, double k = 3.0);

// Fills every nodata pixel by inverse-distance weighting over the nearest
// valid pixels. Distances are in pixel units between cell centers.
GeoGrid idw_fill(const GeoGrid& grid, double power = 2.0, int max_neighbors = 8);

// Per-pixel mean over the members where valid; valid iff >= 1 member valid.
GeoGrid aggregate_time(const std::vector<GeoGrid>& stack);

// Per-channel z-score statistics fitted on the training patches.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std_dev;

    int nchannels() const { return static_cast<int>(mean.size()); }
};

NormStats fit_norm_stats(const std::vector<PatchPair>& patches);

GridStack apply_norm(const GridStack& stack, const NormStats& stats);
GridStack invert_norm(const GridStack& stack, const NormStats& stats);
GeoGrid apply_norm_channel(const GeoGrid& grid, const NormStats& stats, int channel);
GeoGrid invert_norm_channel(const GeoGrid& grid, const NormStats& stats, int channel);

}  // namespace amcn
