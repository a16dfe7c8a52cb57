#include "amcn/grid.hpp"

#include <cmath>
#include <cstdlib>

#include "amcn/detail/resample.hpp"
#include "amcn/error.hpp"

namespace amcn {

namespace {

// Allocation guard for dimensions read from files.
constexpr std::size_t kMaxPixelsPerChannel = std::size_t{1} << 27;

}  // namespace

GeoGrid GeoGrid::create(int nrows, int ncols, double x_min, double y_min,
                        double cell_size, float nodata, std::vector<float> values) {
    GeoGrid g;
    g.nrows = nrows;
    g.ncols = ncols;
    g.x_min = x_min;
    g.y_min = y_min;
    g.cell_size = cell_size;
    g.nodata = nodata;
    if (values.empty() && nrows > 0 && ncols > 0) {
        values.assign(static_cast<std::size_t>(nrows) * ncols, nodata);
    }
    g.values = std::move(values);
    g.validate();
    return g;
}

void GeoGrid::validate() const {
    if (nrows < 1 || ncols < 1) {
        throw DimensionError("grid dimensions must be at least 1x1");
    }
    if (static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols) > kMaxPixelsPerChannel) {
        throw DimensionError("grid dimension overflow");
    }
    if (!(cell_size > 0.0)) {
        throw InvalidArgument("cell_size must be positive");
    }
    if (!std::isfinite(nodata)) {
        throw InvalidArgument("nodata sentinel must be finite");
    }
    if (values.size() != size()) {
        throw DimensionError("value count does not match nrows*ncols");
    }
    for (float v : values) {
        if (v != nodata && !std::isfinite(v)) {
            throw NumericError("non-sentinel grid value is not finite");
        }
    }
}

bool GeoGrid::same_geometry(const GeoGrid& other) const {
    return nrows == other.nrows && ncols == other.ncols && x_min == other.x_min &&
           y_min == other.y_min && cell_size == other.cell_size;
}

GridStack GridStack::create(std::vector<GeoGrid> channels, std::vector<std::string> names) {
    GridStack s;
    s.channels = std::move(channels);
    s.channel_names = std::move(names);
    s.validate();
    return s;
}

void GridStack::validate() const {
    if (channels.empty()) {
        throw DimensionError("stack must have at least one channel");
    }
    if (channel_names.size() != channels.size()) {
        throw DimensionError("channel name count does not match channel count");
    }
    for (const GeoGrid& g : channels) {
        g.validate();
        if (!g.same_geometry(channels.front())) {
            throw DimensionError("stack channels are not co-registered");
        }
    }
}

std::vector<std::string> canonical_ancillary_names() {
    std::vector<std::string> names;
    for (std::size_t i = 1; i < kCanonicalChannelNames.size(); ++i) {
        names.emplace_back(kCanonicalChannelNames[i]);
    }
    return names;
}

using detail::AxisSample;
using detail::axis_sample;

GeoGrid bilinear_resample(const GeoGrid& grid, int numer, int denom) {
    grid.validate();
    if (numer < 1 || denom < 1 || (numer != 1 && denom != 1)) {
        throw InvalidArgument("resample factor must be r/1 or 1/r with r >= 1");
    }
    if (denom > 1 && (grid.nrows % denom != 0 || grid.ncols % denom != 0)) {
        throw DimensionError("downsample factor does not divide grid dimensions");
    }

    const int out_rows = denom > 1 ? grid.nrows / denom : grid.nrows * numer;
    const int out_cols = denom > 1 ? grid.ncols / denom : grid.ncols * numer;
    const double scale = static_cast<double>(denom) / static_cast<double>(numer);

    GeoGrid out;
    out.nrows = out_rows;
    out.ncols = out_cols;
    out.x_min = grid.x_min;
    out.y_min = grid.y_min;
    out.cell_size = grid.cell_size * scale;
    out.nodata = grid.nodata;
    out.values.resize(out.size());

    std::vector<AxisSample> rows(out_rows), cols(out_cols);
    for (int r = 0; r < out_rows; ++r) rows[r] = axis_sample(r, grid.nrows, scale);
    for (int c = 0; c < out_cols; ++c) cols[c] = axis_sample(c, grid.ncols, scale);

    for (int r = 0; r < out_rows; ++r) {
        const AxisSample& ry = rows[r];
        for (int c = 0; c < out_cols; ++c) {
            const AxisSample& cx = cols[c];
            const float v00 = grid.at(ry.i0, cx.i0);
            const float v01 = grid.at(ry.i0, cx.i1);
            const float v10 = grid.at(ry.i1, cx.i0);
            const float v11 = grid.at(ry.i1, cx.i1);
            const double w00 = (1.0 - ry.w1) * (1.0 - cx.w1);
            const double w01 = (1.0 - ry.w1) * cx.w1;
            const double w10 = ry.w1 * (1.0 - cx.w1);
            const double w11 = ry.w1 * cx.w1;
            // A source pixel is part of the stencil iff its weight is nonzero.
            bool hole = (w00 > 0.0 && v00 == grid.nodata) || (w01 > 0.0 && v01 == grid.nodata) ||
                        (w10 > 0.0 && v10 == grid.nodata) || (w11 > 0.0 && v11 == grid.nodata);
            if (hole) {
                out.at(r, c) = out.nodata;
            } else {
                double acc = w00 * v00 + w01 * v01 + w10 * v10 + w11 * v11;
                out.at(r, c) = static_cast<float>(acc);
            }
        }
    }
    out.validate();
    return out;
}

std::pair<GeoGrid, GeoGrid> make_coordinate_channels(const GeoGrid& tmpl) {
    tmpl.validate();
    GeoGrid lon = tmpl;
    GeoGrid lat = tmpl;
    for (int r = 0; r < tmpl.nrows; ++r) {
        for (int c = 0; c < tmpl.ncols; ++c) {
            lon.at(r, c) = static_cast<float>(tmpl.lon_center(c));
            lat.at(r, c) = static_cast<float>(tmpl.lat_center(r));
        }
    }
    return {std::move(lon), std::move(lat)};
}

namespace {

GeoGrid crop(const GeoGrid& g, int r0, int c0, int p) {
    GeoGrid out;
    out.nrows = p;
    out.ncols = p;
    out.cell_size = g.cell_size;
    out.x_min = g.x_min + c0 * g.cell_size;
    out.y_min = g.y_min + (g.nrows - r0 - p) * g.cell_size;
    out.nodata = g.nodata;
    out.values.resize(static_cast<std::size_t>(p) * p);
    for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) {
            out.at(r, c) = g.at(r0 + r, c0 + c);
        }
    }
    return out;
}

bool has_nodata(const GeoGrid& g) {
    for (float v : g.values) {
        if (v == g.nodata) return true;
    }
    return false;
}

}  // namespace

std::vector<PatchPair> extract_patches(const GridStack& input, const GeoGrid& label,
                                       const GeoGrid& lr, int p, int stride) {
    input.validate();
    label.validate();
    lr.validate();
    if (!label.same_geometry(input.channels.front())) {
        throw DimensionError("label extent does not match input stack");
    }
    if (p < 1 || stride < 1) {
        throw InvalidArgument("patch size and stride must be positive");
    }
    if (label.nrows % lr.nrows != 0 || label.ncols % lr.ncols != 0) {
        throw DimensionError("coarse grid does not nest into the fine grid");
    }
    const int r_row = label.nrows / lr.nrows;
    const int r_col = label.ncols / lr.ncols;
    if (r_row != r_col) {
        throw DimensionError("anisotropic scale between fine and coarse grids");
    }
    const int r = r_row;
    if (lr.x_min != label.x_min || lr.y_min != label.y_min ||
        lr.cell_size != label.cell_size * r) {
        throw DimensionError("coarse grid extent is misaligned with the fine grid");
    }
    if (p % r != 0) {
        throw InvalidArgument("patch size must be divisible by the scale factor");
    }
    if (stride % r != 0) {
        throw InvalidArgument("stride must be divisible by the scale factor");
    }

    std::vector<PatchPair> out;
    for (int r0 = 0; r0 + p <= label.nrows; r0 += stride) {
        for (int c0 = 0; c0 + p <= label.ncols; c0 += stride) {
            PatchPair pp;
            pp.label = crop(label, r0, c0, p);
            bool ok = !has_nodata(pp.label);
            std::vector<GeoGrid> chans;
            chans.reserve(input.channels.size());
            for (const GeoGrid& ch : input.channels) {
                chans.push_back(crop(ch, r0, c0, p));
                if (ok && has_nodata(chans.back())) ok = false;
            }
            pp.lr = crop(lr, r0 / r, c0 / r, p / r);
            if (ok && has_nodata(pp.lr)) ok = false;
            if (!ok) continue;
            pp.input = GridStack::create(std::move(chans), input.channel_names);
            pp.valid = true;
            out.push_back(std::move(pp));
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::optional<float>>> sample_at_stations(
    const GeoGrid& grid, const StationSet& stations) {
    grid.validate();
    std::vector<std::pair<std::string, std::optional<float>>> out;
    out.reserve(stations.size());
    for (const StationRecord& st : stations.records) {
        if (st.lon < grid.x_min || st.lon > grid.x_max() || st.lat < grid.y_min ||
            st.lat > grid.y_max()) {
            throw InvalidArgument("station " + st.id + " outside grid extent");
        }
        int c = static_cast<int>(std::floor((st.lon - grid.x_min) / grid.cell_size));
        int row_from_south = static_cast<int>(std::floor((st.lat - grid.y_min) / grid.cell_size));
        // Stations exactly on the east/north boundary belong to the last cell.
        if (c > grid.ncols - 1) c = grid.ncols - 1;
        if (row_from_south > grid.nrows - 1) row_from_south = grid.nrows - 1;
        int r = grid.nrows - 1 - row_from_south;
        float v = grid.at(r, c);
        if (v == grid.nodata) {
            out.emplace_back(st.id, std::nullopt);
        } else {
            out.emplace_back(st.id, v);
        }
    }
    return out;
}

}  // namespace amcn
