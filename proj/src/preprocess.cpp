#include "amcn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amcn/error.hpp"

namespace amcn {

namespace {

struct LinearFit {
    double intercept;
    double slope;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx < 1e-12) {
        throw NumericError("degenerate edge fit: EVI spread too small");
    }
    const double slope = sxy / sxx;
    return {my - slope * mx, slope};
}

void require_same_geometry(const GeoGrid& a, const GeoGrid& b, const char* what) {
    if (!a.same_geometry(b)) {
        throw DimensionError(std::string("grids are not co-registered: ") + what);
    }
}

}  // namespace

EdgeFit fit_tvdi_edges(const GeoGrid& lst, const GeoGrid& evi, int n_bins) {
    lst.validate();
    evi.validate();
    require_same_geometry(lst, evi, "lst/evi");
    if (n_bins < 2) throw InvalidArgument("n_bins must be at least 2");

    double evi_min = std::numeric_limits<double>::infinity();
    double evi_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < evi.values.size(); ++i) {
        if (evi.values[i] == evi.nodata || lst.values[i] == lst.nodata) continue;
        evi_min = std::min(evi_min, static_cast<double>(evi.values[i]));
        evi_max = std::max(evi_max, static_cast<double>(evi.values[i]));
    }
    if (!(evi_max > evi_min)) {
        throw NumericError("fewer than 2 EVI bins populated");
    }

    const double width = (evi_max - evi_min) / n_bins;
    struct BinExtrema {
        bool seen = false;
        double min_lst = 0.0, min_evi = 0.0;
        double max_lst = 0.0, max_evi = 0.0;
    };
    std::vector<BinExtrema> bins(static_cast<std::size_t>(n_bins));
    for (std::size_t i = 0; i < evi.values.size(); ++i) {
        if (evi.values[i] == evi.nodata || lst.values[i] == lst.nodata) continue;
        const double e = evi.values[i];
        const double t = lst.values[i];
        int b = static_cast<int>((e - evi_min) / width);
        b = std::clamp(b, 0, n_bins - 1);
        BinExtrema& bx = bins[static_cast<std::size_t>(b)];
        if (!bx.seen) {
            bx.seen = true;
            bx.min_lst = bx.max_lst = t;
            bx.min_evi = bx.max_evi = e;
        } else {
            if (t < bx.min_lst) {
                bx.min_lst = t;
                bx.min_evi = e;
            }
            if (t > bx.max_lst) {
                bx.max_lst = t;
                bx.max_evi = e;
            }
        }
    }

    std::vector<double> wet_x, wet_y, dry_x, dry_y;
    for (const BinExtrema& bx : bins) {
        if (!bx.seen) continue;
        wet_x.push_back(bx.min_evi);
        wet_y.push_back(bx.min_lst);
        dry_x.push_back(bx.max_evi);
        dry_y.push_back(bx.max_lst);
    }
    if (wet_x.size() < 2) {
        throw NumericError("fewer than 2 EVI bins populated");
    }

    const LinearFit wet = least_squares(wet_x, wet_y);
    const LinearFit dry = least_squares(dry_x, dry_y);
    if (!std::isfinite(wet.slope) || !std::isfinite(dry.slope)) {
        throw NumericError("edge fit produced non-finite coefficients");
    }

    EdgeFit fit;
    fit.wet_intercept = wet.intercept;
    fit.wet_slope = wet.slope;
    fit.dry_intercept = dry.intercept;
    fit.dry_slope = dry.slope;
    fit.n_bins = n_bins;
    // Both edges are lines, so checking the endpoints of the observed EVI
    // range covers the whole interval.
    if (fit.dry(evi_min) <= fit.wet(evi_min) || fit.dry(evi_max) <= fit.wet(evi_max)) {
        throw NumericError("dry edge does not lie above wet edge");
    }
    return fit;
}

GeoGrid compute_tvdi(const GeoGrid& lst, const GeoGrid& evi, const EdgeFit& edges) {
    lst.validate();
    evi.validate();
    require_same_geometry(lst, evi, "lst/evi");
    GeoGrid out = lst;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (lst.values[i] == lst.nodata || evi.values[i] == evi.nodata) {
            out.values[i] = out.nodata;
            continue;
        }
        const double e = evi.values[i];
        const double t_min = edges.wet(e);
        const double t_max = edges.dry(e);
        const double denom = t_max - t_min;
        if (denom < 1e-6) {
            throw NumericError("degenerate TVDI edges at a pixel");
        }
        const double v = (lst.values[i] - t_min) / denom;
        out.values[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

namespace {

GeoGrid normalized_difference(const GeoGrid& a, const GeoGrid& b, const char* what) {
    a.validate();
    b.validate();
    require_same_geometry(a, b, what);
    GeoGrid out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (a.values[i] == a.nodata || b.values[i] == b.nodata) {
            out.values[i] = out.nodata;
            continue;
        }
        const double num = static_cast<double>(a.values[i]) - b.values[i];
        const double den = static_cast<double>(a.values[i]) + b.values[i];
        if (den <= 1e-9) {
            out.values[i] = out.nodata;
        } else {
            out.values[i] = static_cast<float>(num / den);
        }
    }
    return out;
}

}  // namespace

GeoGrid compute_ndwi(const GeoGrid& nir, const GeoGrid& mir) {
    return normalized_difference(nir, mir, "nir/mir");
}

GeoGrid compute_lswi(const GeoGrid& nir, const GeoGrid& swir2) {
    return normalized_difference(nir, swir2, "nir/swir2");
}

GeoGrid screen_outliers(const GeoGrid& grid, int window, double k) {
    grid.validate();
    if (window < 3 || window % 2 == 0) {
        throw InvalidArgument("window must be odd and at least 3");
    }
    if (!(k > 0.0)) throw InvalidArgument("k must be positive");

    const int half = window / 2;
    GeoGrid out = grid;
    for (int r = 0; r < grid.nrows; ++r) {
        for (int c = 0; c < grid.ncols; ++c) {
            const float v = grid.at(r, c);
            if (v == grid.nodata) continue;
            // Statistics over the valid neighbors, center pixel excluded.
            double sum = 0.0, sum_sq = 0.0;
            int n = 0;
            for (int dr = -half; dr <= half; ++dr) {
                for (int dc = -half; dc <= half; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || rr >= grid.nrows || cc < 0 || cc >= grid.ncols) continue;
                    const float w = grid.at(rr, cc);
                    if (w == grid.nodata) continue;
                    sum += w;
                    sum_sq += static_cast<double>(w) * w;
                    ++n;
                }
            }
            if (n < 2) continue;
            const double mean = sum / n;
            const double var = std::max(0.0, sum_sq / n - mean * mean);
            const double sd = std::sqrt(var);
            if (std::abs(v - mean) > k * sd) {
                out.at(r, c) = out.nodata;
            }
        }
    }
    return out;
}

GeoGrid idw_fill(const GeoGrid& grid, double power, int max_neighbors) {
    grid.validate();
    if (!(power > 0.0)) throw InvalidArgument("power must be positive");
    if (max_neighbors < 1) throw InvalidArgument("max_neighbors must be at least 1");

    struct ValidPixel {
        int r, c;
        float v;
    };
    std::vector<ValidPixel> valid;
    valid.reserve(grid.values.size());
    std::vector<std::size_t> holes;
    for (int r = 0; r < grid.nrows; ++r) {
        for (int c = 0; c < grid.ncols; ++c) {
            if (grid.is_nodata(r, c)) {
                holes.push_back(static_cast<std::size_t>(r) * grid.ncols + c);
            } else {
                valid.push_back({r, c, grid.at(r, c)});
            }
        }
    }
    if (valid.empty()) throw NumericError("cannot fill an all-nodata grid");
    if (holes.empty()) return grid;

    GeoGrid out = grid;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(max_neighbors),
                                                valid.size());
    struct Cand {
        double d2;
        std::size_t idx;  // index into `valid`, also the tie-break (row-major)
    };
    std::vector<Cand> cands(valid.size());
    for (std::size_t h : holes) {
        const int hr = static_cast<int>(h) / grid.ncols;
        const int hc = static_cast<int>(h) % grid.ncols;
        for (std::size_t i = 0; i < valid.size(); ++i) {
            const double dr = valid[i].r - hr;
            const double dc = valid[i].c - hc;
            cands[i] = {dr * dr + dc * dc, i};
        }
        auto less = [](const Cand& a, const Cand& b) {
            return a.d2 != b.d2 ? a.d2 < b.d2 : a.idx < b.idx;
        };
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k),
                          cands.end(), less);
        double wsum = 0.0, acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double d = std::sqrt(cands[i].d2);
            const double w = std::pow(d, -power);
            wsum += w;
            acc += w * valid[cands[i].idx].v;
        }
        out.values[h] = static_cast<float>(acc / wsum);
    }
    return out;
}

GeoGrid aggregate_time(const std::vector<GeoGrid>& stack) {
    if (stack.empty()) throw InvalidArgument("cannot aggregate an empty stack");
    for (const GeoGrid& g : stack) {
        g.validate();
        require_same_geometry(g, stack.front(), "time stack");
    }
    GeoGrid out = stack.front();
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double sum = 0.0;
        int n = 0;
        for (const GeoGrid& g : stack) {
            if (g.values[i] == g.nodata) continue;
            sum += g.values[i];
            ++n;
        }
        out.values[i] = n > 0 ? static_cast<float>(sum / n) : out.nodata;
    }
    return out;
}

NormStats fit_norm_stats(const std::vector<PatchPair>& patches) {
    if (patches.size() < 2) throw InvalidArgument("need at least 2 patches for statistics");
    const int nch = patches.front().input.nchannels();
    NormStats stats;
    stats.mean.resize(static_cast<std::size_t>(nch));
    stats.std_dev.resize(static_cast<std::size_t>(nch));
    for (int ch = 0; ch < nch; ++ch) {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t n = 0;
        for (const PatchPair& p : patches) {
            if (p.input.nchannels() != nch) {
                throw DimensionError("inconsistent channel counts across patches");
            }
            for (float v : p.input.channel(ch).values) {
                sum += v;
                sum_sq += static_cast<double>(v) * v;
                ++n;
            }
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) {
            throw NumericError("zero-variance channel " + std::to_string(ch));
        }
        stats.mean[static_cast<std::size_t>(ch)] = mean;
        stats.std_dev[static_cast<std::size_t>(ch)] = sd;
    }
    return stats;
}

GeoGrid apply_norm_channel(const GeoGrid& grid, const NormStats& stats, int channel) {
    if (channel < 0 || channel >= stats.nchannels()) {
        throw InvalidArgument("channel index out of range");
    }
    const double m = stats.mean[static_cast<std::size_t>(channel)];
    const double s = stats.std_dev[static_cast<std::size_t>(channel)];
    GeoGrid out = grid;
    for (float& v : out.values) {
        if (v == grid.nodata) continue;
        v = static_cast<float>((v - m) / s);
    }
    return out;
}

GeoGrid invert_norm_channel(const GeoGrid& grid, const NormStats& stats, int channel) {
    if (channel < 0 || channel >= stats.nchannels()) {
        throw InvalidArgument("channel index out of range");
    }
    const double m = stats.mean[static_cast<std::size_t>(channel)];
    const double s = stats.std_dev[static_cast<std::size_t>(channel)];
    GeoGrid out = grid;
    for (float& v : out.values) {
        if (v == grid.nodata) continue;
        v = static_cast<float>(v * s + m);
    }
    return out;
}

GridStack apply_norm(const GridStack& stack, const NormStats& stats) {
    if (stack.nchannels() != stats.nchannels()) {
        throw DimensionError("stack channel count does not match statistics");
    }
    std::vector<GeoGrid> out;
    out.reserve(stack.channels.size());
    for (int ch = 0; ch < stack.nchannels(); ++ch) {
        out.push_back(apply_norm_channel(stack.channel(ch), stats, ch));
    }
    return GridStack::create(std::move(out), stack.channel_names);
}

GridStack invert_norm(const GridStack& stack, const NormStats& stats) {
    if (stack.nchannels() != stats.nchannels()) {
        throw DimensionError("stack channel count does not match statistics");
    }
    std::vector<GeoGrid> out;
    out.reserve(stack.channels.size());
    for (int ch = 0; ch < stack.nchannels(); ++ch) {
        out.push_back(invert_norm_channel(stack.channel(ch), stats, ch));
    }
    return GridStack::create(std::move(out), stack.channel_names);
}

}  // namespace amcn
