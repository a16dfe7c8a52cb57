#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace amcn {

inline constexpr float kDefaultNodata = -9999.0f;

// Single-channel georeferenced raster on a north-up WGS84 lat/lon grid.
// Values are stored row-major with row 0 as the northernmost row; pixel
// (r, c) has its center at
//   lon = x_min + (c + 0.5) * cell_size
//   lat = y_min + (nrows - r - 0.5) * cell_size
// Pixels equal to `nodata` are missing; all other values are finite.
struct GeoGrid {
    int nrows = 0;
    int ncols = 0;
    double x_min = 0.0;
    double y_min = 0.0;
    double cell_size = 0.0;
    float nodata = kDefaultNodata;
    std::vector<float> values;

    static GeoGrid create(int nrows, int ncols, double x_min, double y_min,
                          double cell_size, float nodata = kDefaultNodata,
                          std::vector<float> values = {});

    // Throws DimensionError / InvalidArgument if an invariant is violated.
    void validate() const;

    std::size_t size() const { return static_cast<std::size_t>(nrows) * ncols; }
    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * ncols + c]; }
    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * ncols + c]; }
    bool is_nodata(int r, int c) const { return at(r, c) == nodata; }

    double lon_center(int c) const { return x_min + (c + 0.5) * cell_size; }
    double lat_center(int r) const { return y_min + (nrows - r - 0.5) * cell_size; }
    double x_max() const { return x_min + ncols * cell_size; }
    double y_max() const { return y_min + nrows * cell_size; }

    bool same_geometry(const GeoGrid& other) const;
};

// Ordered multi-channel stack of co-registered grids.
struct GridStack {
    std::vector<GeoGrid> channels;
    std::vector<std::string> channel_names;

    static GridStack create(std::vector<GeoGrid> channels,
                            std::vector<std::string> names);
    void validate() const;

    int nchannels() const { return static_cast<int>(channels.size()); }
    int nrows() const { return channels.empty() ? 0 : channels.front().nrows; }
    int ncols() const { return channels.empty() ? 0 : channels.front().ncols; }
    const GeoGrid& channel(int i) const { return channels[static_cast<std::size_t>(i)]; }
};

// Canonical channel order of the 10-channel network input: the upsampled
// coarse precipitation followed by the nine ancillary predictors.
inline constexpr std::array<const char*, 10> kCanonicalChannelNames = {
    "precip_up", "longitude", "latitude", "dem",  "lstd",
    "lstn",      "evi",       "tvdi",     "ndwi", "lswi"};

// The nine ancillary channel names (canonical order without precipitation).
std::vector<std::string> canonical_ancillary_names();

// Point measurements used for calibration and station-based evaluation.
struct StationRecord {
    std::string id;
    double lon = 0.0;
    double lat = 0.0;
    std::optional<double> value;  // mm/month; nullopt = missing
};

struct StationSet {
    std::vector<StationRecord> records;

    std::size_t size() const { return records.size(); }
};

// One training sample: co-located HR input stack, HR label and the
// un-upsampled coarse precipitation over the same footprint.
struct PatchPair {
    GridStack input;  // p x p x 10, canonical channel order
    GeoGrid label;    // p x p HR precipitation
    GeoGrid lr;       // (p/r) x (p/r) coarse precipitation
    bool valid = true;
};

// Bilinear resampling with pixel-center alignment. The scale factor is the
// rational numer/denom; exactly one of the two must be 1. Upsampling by r
// multiplies the pixel counts by r, downsampling by 1/r requires the source
// dimensions to be divisible by r. Nodata propagates to every output pixel
// whose interpolation stencil touches a nodata source pixel.
GeoGrid bilinear_resample(const GeoGrid& grid, int numer, int denom);

// Longitude and latitude channels on the template's geometry; every pixel
// holds its own center coordinate.
std::pair<GeoGrid, GeoGrid> make_coordinate_channels(const GeoGrid& tmpl);

// Tiles the domain with the given patch size and stride and drops every
// patch that contains nodata in any channel, the label or the coarse grid.
// `p` must be divisible by the scale ratio between input and lr, and the
// stride must keep tiles aligned to coarse pixel boundaries.
std::vector<PatchPair> extract_patches(const GridStack& input, const GeoGrid& label,
                                       const GeoGrid& lr, int p, int stride);

// Value of the pixel containing each station. Cells are half-open,
// inclusive on their west and south edges; stations on the far east/north
// boundary of the grid fall into the last cell. Nodata yields nullopt.
// Throws InvalidArgument for stations outside the grid extent.
std::vector<std::pair<std::string, std::optional<float>>> sample_at_stations(
    const GeoGrid& grid, const StationSet& stations);

}  // namespace amcn
