#include "amcn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "amcn/error.hpp"
#include "amcn/preprocess.hpp"
#include "amcn/rng.hpp"

namespace amcn {

namespace {

using Field = std::vector<double>;

struct Bump {
    double cr, cc;
    double qrr, qcc, qrc;  // quadratic form coefficients
    double amp;
};

Field bump_field(Rng& rng, int nrows, int ncols, int n_bumps, double sigma_lo, double sigma_hi,
                 bool log_amplitudes) {
    std::vector<Bump> bumps;
    bumps.reserve(static_cast<std::size_t>(n_bumps));
    for (int k = 0; k < n_bumps; ++k) {
        Bump b;
        b.cr = uniform(rng, -0.15 * nrows, 1.15 * nrows);
        b.cc = uniform(rng, -0.15 * ncols, 1.15 * ncols);
        const double s1 = uniform(rng, sigma_lo, sigma_hi);
        const double s2 = uniform(rng, sigma_lo, sigma_hi);
        const double th = uniform(rng, 0.0, 3.141592653589793);
        const double u = std::cos(th), v = std::sin(th);
        const double a1 = 0.5 / (s1 * s1), a2 = 0.5 / (s2 * s2);
        b.qrr = u * u * a1 + v * v * a2;
        b.qcc = v * v * a1 + u * u * a2;
        b.qrc = 2.0 * u * v * (a1 - a2);
        if (log_amplitudes) {
            b.amp = std::exp(normal01(rng) * 0.8);
        } else {
            b.amp = uniform(rng, 0.4, 1.0) * (below(rng, 2) ? 1.0 : -1.0);
        }
        bumps.push_back(b);
    }
    Field f(static_cast<std::size_t>(nrows) * ncols, 0.0);
    for (const Bump& b : bumps) {
        for (int r = 0; r < nrows; ++r) {
            const double dr = r - b.cr;
            for (int c = 0; c < ncols; ++c) {
                const double dc = c - b.cc;
                const double q = b.qrr * dr * dr + b.qcc * dc * dc + b.qrc * dr * dc;
                if (q < 30.0) {
                    f[static_cast<std::size_t>(r) * ncols + c] += b.amp * std::exp(-q);
                }
            }
        }
    }
    return f;
}

void standardize(Field& f) {
    double sum = 0.0, sum_sq = 0.0;
    for (double v : f) {
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(f.size());
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
    if (sd < 1e-12) {
        std::fill(f.begin(), f.end(), 0.0);
        return;
    }
    for (double& v : f) v = (v - mean) / sd;
}

Field smooth_unit_field(std::uint64_t seed, std::uint64_t stream, int nrows, int ncols,
                        int n_bumps, double sigma_lo, double sigma_hi) {
    Rng rng(mix_seed(seed, stream));
    Field f = bump_field(rng, nrows, ncols, n_bumps, sigma_lo, sigma_hi, false);
    standardize(f);
    return f;
}

GeoGrid to_grid(const Field& f, const SynthOptions& opt) {
    GeoGrid g;
    g.nrows = opt.nrows;
    g.ncols = opt.ncols;
    g.x_min = opt.x_min;
    g.y_min = opt.y_min;
    g.cell_size = opt.cell_size;
    g.values.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g.values[i] = static_cast<float>(f[i]);
    g.validate();
    return g;
}

void inject_defects(GeoGrid& g, Rng& rng, int n_spikes, int n_holes) {
    double sum = 0.0, sum_sq = 0.0;
    for (float v : g.values) {
        sum += v;
        sum_sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(g.values.size());
    const double sd = std::sqrt(std::max(1e-12, sum_sq / n - (sum / n) * (sum / n)));
    for (int i = 0; i < n_spikes; ++i) {
        const std::size_t p = static_cast<std::size_t>(below(rng, g.values.size()));
        const double sign = below(rng, 2) ? 1.0 : -1.0;
        g.values[p] = static_cast<float>(g.values[p] + sign * 10.0 * sd);
    }
    for (int i = 0; i < n_holes; ++i) {
        const std::size_t p = static_cast<std::size_t>(below(rng, g.values.size()));
        g.values[p] = g.nodata;
    }
}

}  // namespace

GridStack derive_ancillary(const GridStack& raw) {
    raw.validate();
    if (raw.nchannels() != static_cast<int>(kRawFieldNames.size())) {
        throw DimensionError("raw scene stack must have 7 channels");
    }
    for (int i = 0; i < raw.nchannels(); ++i) {
        if (raw.channel_names[static_cast<std::size_t>(i)] != kRawFieldNames[static_cast<std::size_t>(i)]) {
            throw FormatError("raw scene channels are not in the expected order");
        }
    }
    const GeoGrid& dem = raw.channel(0);
    auto clean = [](const GeoGrid& g) { return idw_fill(screen_outliers(g), 2.0, 8); };
    GeoGrid lstd = clean(raw.channel(1));
    GeoGrid lstn = clean(raw.channel(2));
    GeoGrid evi = clean(raw.channel(3));
    GeoGrid nir = clean(raw.channel(4));
    GeoGrid mir = clean(raw.channel(5));
    GeoGrid swir2 = clean(raw.channel(6));

    EdgeFit edges = fit_tvdi_edges(lstd, evi);
    GeoGrid tvdi = compute_tvdi(lstd, evi, edges);
    GeoGrid ndwi = compute_ndwi(nir, mir);
    GeoGrid lswi = compute_lswi(nir, swir2);
    auto [lon, lat] = make_coordinate_channels(dem);

    std::vector<GeoGrid> channels{std::move(lon),  std::move(lat),  dem,
                                  std::move(lstd), std::move(lstn), std::move(evi),
                                  std::move(tvdi), std::move(ndwi), std::move(lswi)};
    return GridStack::create(std::move(channels), canonical_ancillary_names());
}

SynthScene synth_scene(std::uint64_t seed, const SynthOptions& opt) {
    if (opt.nrows % opt.scale != 0 || opt.ncols % opt.scale != 0) {
        throw InvalidArgument("scene dimensions must be divisible by the scale factor");
    }
    const int nr = opt.nrows, nc = opt.ncols;
    const double n_diag = std::sqrt(static_cast<double>(nr) * nc);

    // Large-scale structure (visible at the coarse scale) and fine-scale
    // drivers (below the coarse pixel size, carried by the ancillary fields).
    Field base_n = smooth_unit_field(seed, 1, nr, nc, 6, 0.22 * n_diag, 0.55 * n_diag);
    Field moisture_n = smooth_unit_field(seed, 2, nr, nc, 7, 0.18 * n_diag, 0.45 * n_diag);
    Field dem_smooth_n = smooth_unit_field(seed, 3, nr, nc, 6, 0.2 * n_diag, 0.5 * n_diag);
    Field dem_detail_n = smooth_unit_field(seed, 4, nr, nc, 45, 1.5, 4.0);
    Field evi_detail_n = smooth_unit_field(seed, 5, nr, nc, 45, 1.5, 4.0);
    Field lst_tex_n = smooth_unit_field(seed, 6, nr, nc, 35, 2.0, 6.0);
    Field tex1 = smooth_unit_field(seed, 7, nr, nc, 25, 2.0, 8.0);
    Field tex2 = smooth_unit_field(seed, 8, nr, nc, 25, 2.0, 8.0);
    Field tex3 = smooth_unit_field(seed, 9, nr, nc, 25, 2.0, 8.0);
    Field tex4 = smooth_unit_field(seed, 10, nr, nc, 25, 2.0, 8.0);
    // Precipitation structure carried by no ancillary field; only its
    // imprint on the coarse input tells the model about it.
    Field unobs_n = smooth_unit_field(seed, 13, nr, nc, 20, 3.0, 10.0);

    const std::size_t npx = static_cast<std::size_t>(nr) * nc;
    Field detail(npx), hr(npx);
    // Each driver contributes through its own nonlinearity, so recovering
    // the detail needs factor-specific processing, not just a linear blend.
    for (std::size_t i = 0; i < npx; ++i) {
        const double d_dem = std::tanh(1.5 * dem_detail_n[i]);
        const double d_evi = (evi_detail_n[i] * evi_detail_n[i] - 1.0) * 0.70710678;
        const double d_lst = std::abs(lst_tex_n[i]) - 0.79788456;  // E|N(0,1)|
        detail[i] = 0.55 * d_dem + 0.5 * d_evi + 0.4 * d_lst;
    }
    standardize(detail);
    for (std::size_t i = 0; i < npx; ++i) {
        const double base = 22.0 * std::exp(0.85 * base_n[i]);  // skewed, wide range
        hr[i] = base * (1.0 + opt.detail_strength * std::tanh(detail[i]) +
                        0.25 * std::tanh(unobs_n[i]));
    }

    Field dem(npx), lstd(npx), lstn(npx), evi(npx), nir(npx), mir(npx), swir2(npx);
    for (std::size_t i = 0; i < npx; ++i) {
        dem[i] = 1500.0 + 650.0 * (0.75 * dem_smooth_n[i] + 0.65 * dem_detail_n[i]);
        lstd[i] = 294.0 + 5.0 * lst_tex_n[i] - 2.5 * base_n[i] - 2.0 * dem_smooth_n[i] +
                  1.0 * tex4[i];
        lstn[i] = lstd[i] - 11.0 + 1.5 * tex1[i];
        evi[i] = std::clamp(0.45 + 0.16 * evi_detail_n[i] + 0.1 * base_n[i] + 0.04 * tex2[i],
                            0.01, 0.95);
        nir[i] = std::clamp(0.32 + 0.1 * evi[i] + 0.03 * tex3[i], 0.02, 0.95);
        mir[i] = std::clamp(0.24 - 0.06 * moisture_n[i] + 0.02 * tex1[i], 0.02, 0.95);
        swir2[i] = std::clamp(0.21 - 0.05 * moisture_n[i] + 0.025 * tex2[i], 0.02, 0.95);
    }

    SynthScene scene;
    scene.hr_precip = to_grid(hr, opt);
    scene.lr_precip = bilinear_resample(scene.hr_precip, 1, opt.scale);

    std::vector<GeoGrid> raw_channels{to_grid(dem, opt), to_grid(lstd, opt), to_grid(lstn, opt),
                                      to_grid(evi, opt), to_grid(nir, opt),  to_grid(mir, opt),
                                      to_grid(swir2, opt)};
    Rng defect_rng(mix_seed(seed, 11));
    for (std::size_t ch = 1; ch < raw_channels.size(); ++ch) {  // optical fields only
        inject_defects(raw_channels[ch], defect_rng, opt.n_spikes, opt.n_holes);
    }
    std::vector<std::string> raw_names(kRawFieldNames.begin(), kRawFieldNames.end());
    scene.raw = GridStack::create(std::move(raw_channels), std::move(raw_names));
    scene.ancillary = derive_ancillary(scene.raw);

    Rng station_rng(mix_seed(seed, 12));
    std::unordered_set<std::size_t> used;
    int placed = 0;
    while (placed < opt.n_stations && used.size() < npx) {
        const std::size_t p = static_cast<std::size_t>(below(station_rng, npx));
        if (!used.insert(p).second) continue;
        const int r = static_cast<int>(p) / nc;
        const int c = static_cast<int>(p) % nc;
        StationRecord st;
        st.id = "S" + std::to_string(placed);
        st.lon = scene.hr_precip.lon_center(c);
        st.lat = scene.hr_precip.lat_center(r);
        double v = scene.hr_precip.at(r, c) + opt.station_bias;
        if (opt.station_noise > 0.0) v += opt.station_noise * normal01(station_rng);
        st.value = std::max(0.0, v);
        scene.stations.records.push_back(std::move(st));
        ++placed;
    }
    return scene;
}

}  // namespace amcn
