#include "amcn/gda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "amcn/error.hpp"
#include "amcn/parallel.hpp"

namespace amcn {

ResidualTable station_residuals(const GeoGrid& downscaled, const StationSet& stations) {
    auto sampled = sample_at_stations(downscaled, stations);
    ResidualTable table;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const StationRecord& st = stations.records[i];
        if (!st.value.has_value() || !sampled[i].second.has_value()) {
            ++table.skipped;
            continue;
        }
        StationResidual r;
        r.id = st.id;
        r.lon = st.lon;
        r.lat = st.lat;
        r.observed = *st.value;
        r.predicted = *sampled[i].second;
        r.delta = r.observed - r.predicted;
        table.residuals.push_back(std::move(r));
    }
    if (table.residuals.empty()) {
        throw InvalidArgument("no usable stations for residual calibration");
    }
    return table;
}

GeoGrid idw_surface(const std::vector<StationResidual>& residuals, const GeoGrid& tmpl,
                    double power, int max_neighbors) {
    tmpl.validate();
    if (residuals.empty()) throw InvalidArgument("no residuals to interpolate");
    if (!(power > 0.0)) throw InvalidArgument("power must be positive");
    if (max_neighbors < 1) throw InvalidArgument("max_neighbors must be at least 1");

    const std::size_t k =
        std::min<std::size_t>(static_cast<std::size_t>(max_neighbors), residuals.size());
    GeoGrid out = tmpl;
    struct Cand {
        double d2;
        std::size_t idx;
    };
    parallel_for(static_cast<std::size_t>(tmpl.nrows), [&](std::size_t r_lo, std::size_t r_hi) {
        std::vector<Cand> cands(residuals.size());
        for (std::size_t r = r_lo; r < r_hi; ++r) {
            const double lat = tmpl.lat_center(static_cast<int>(r));
            for (int c = 0; c < tmpl.ncols; ++c) {
                const double lon = tmpl.lon_center(c);
                bool exact = false;
                for (std::size_t i = 0; i < residuals.size(); ++i) {
                    const double dx = residuals[i].lon - lon;
                    const double dy = residuals[i].lat - lat;
                    const double d2 = dx * dx + dy * dy;
                    cands[i] = {d2, i};
                    if (d2 < 1e-18) {  // center coincides with a station
                        out.at(static_cast<int>(r), c) = static_cast<float>(residuals[i].delta);
                        exact = true;
                        break;
                    }
                }
                if (exact) continue;
                auto less = [](const Cand& a, const Cand& b) {
                    return a.d2 != b.d2 ? a.d2 < b.d2 : a.idx < b.idx;
                };
                std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k),
                                  cands.end(), less);
                double wsum = 0.0, acc = 0.0;
                for (std::size_t i = 0; i < k; ++i) {
                    const double w = std::pow(std::sqrt(cands[i].d2), -power);
                    wsum += w;
                    acc += w * residuals[cands[i].idx].delta;
                }
                out.at(static_cast<int>(r), c) = static_cast<float>(acc / wsum);
            }
        }
    });
    return out;
}

GeoGrid apply_gda(const GeoGrid& downscaled, const StationSet& stations, double power,
                  int max_neighbors) {
    ResidualTable table = station_residuals(downscaled, stations);
    GeoGrid surface = idw_surface(table.residuals, downscaled, power, max_neighbors);
    GeoGrid out = downscaled;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (out.values[i] == out.nodata) continue;
        const double v = static_cast<double>(out.values[i]) + surface.values[i];
        out.values[i] = static_cast<float>(std::max(0.0, v));
    }
    // A station sitting exactly on a pixel center pins that pixel to the
    // observed value; the additive path recovers it only to rounding.
    for (const StationResidual& r : table.residuals) {
        const int c = static_cast<int>(std::floor((r.lon - out.x_min) / out.cell_size));
        const int row_s = static_cast<int>(std::floor((r.lat - out.y_min) / out.cell_size));
        const int row = out.nrows - 1 - std::min(row_s, out.nrows - 1);
        const int col = std::min(c, out.ncols - 1);
        if (std::abs(r.lon - out.lon_center(col)) < 1e-9 &&
            std::abs(r.lat - out.lat_center(row)) < 1e-9 &&
            out.at(row, col) != out.nodata) {
            out.at(row, col) = static_cast<float>(std::max(0.0, r.observed));
        }
    }
    return out;
}

void write_residual_csv(const ResidualTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "station_id,lon,lat,observed,predicted,delta\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const StationResidual& r : table.residuals) {
        os << r.id << ',' << fmt(r.lon) << ',' << fmt(r.lat) << ',' << fmt(r.observed) << ','
           << fmt(r.predicted) << ',' << fmt(r.delta) << '\n';
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace amcn
