#pragma once

#include <string>
#include <vector>

#include "amcn/grid.hpp"

namespace amcn {

struct StationResidual {
    std::string id;
    double lon = 0.0;
    double lat = 0.0;
    double observed = 0.0;   // station value, mm/month
    double predicted = 0.0;  // downscaled value at the station pixel
    double delta = 0.0;      // observed - predicted
};

// Differences between station readings and the downscaled raster at the
// stations' pixels. Stations over nodata or with missing values are
// skipped; `skipped` counts them.
struct ResidualTable {
    std::vector<StationResidual> residuals;
    std::size_t skipped = 0;
};

ResidualTable station_residuals(const GeoGrid& downscaled, const StationSet& stations);

// Inverse-distance interpolation of the residuals onto the template grid
// using planar degree distances. A pixel whose center coincides with a
// station takes that station's delta exactly.
GeoGrid idw_surface(const std::vector<StationResidual>& residuals, const GeoGrid& tmpl,
                    double power = 2.0, int max_neighbors = 12);

// Additive residual correction: downscaled + interpolated residual surface,
// clamped at zero, nodata preserved.
GeoGrid apply_gda(const GeoGrid& downscaled, const StationSet& stations, double power = 2.0,
                  int max_neighbors = 12);

void write_residual_csv(const ResidualTable& table, const std::string& path);

}  // namespace amcn
