#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "amcn/error.hpp"
#include "amcn/grid.hpp"
#include "amcn/preprocess.hpp"
#include "amcn/rng.hpp"

using namespace amcn;

namespace {

GeoGrid blank(int nrows, int ncols, float fill = 0.0f) {
    return GeoGrid::create(nrows, ncols, 100.0, 30.0, 0.01, kDefaultNodata,
                           std::vector<float>(static_cast<std::size_t>(nrows) * ncols, fill));
}

}  // namespace

TEST_CASE("tvdi edges recover the generating lines") {
    // Half the pixels sit on a dry line 300 - 20*EVI, half on a wet line
    // 280 - 20*EVI, with EVI swept over [0.05, 0.95].
    const int n = 20;
    GeoGrid evi = blank(n, n);
    GeoGrid lst = blank(n, n);
    Rng rng(3);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double e = uniform(rng, 0.05, 0.95);
            evi.at(r, c) = static_cast<float>(e);
            const bool dry = (r + c) % 2 == 0;
            lst.at(r, c) = static_cast<float>((dry ? 300.0 : 280.0) - 20.0 * e);
        }
    }
    EdgeFit fit = fit_tvdi_edges(lst, evi, 10);
    CHECK(fit.dry_slope == doctest::Approx(-20.0).epsilon(1e-3));
    CHECK(fit.wet_slope == doctest::Approx(-20.0).epsilon(1e-3));
    CHECK(fit.dry_intercept == doctest::Approx(300.0).epsilon(1e-3));
    CHECK(fit.wet_intercept == doctest::Approx(280.0).epsilon(1e-3));

    SUBCASE("tvdi maps wet edge to 0, dry edge to 1, midpoint to 0.5") {
        GeoGrid tv = compute_tvdi(lst, evi, fit);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const bool dry = (r + c) % 2 == 0;
                CHECK(tv.at(r, c) == doctest::Approx(dry ? 1.0 : 0.0).epsilon(1e-3));
            }
        }
        GeoGrid mid = lst;
        for (std::size_t i = 0; i < mid.values.size(); ++i) {
            mid.values[i] = static_cast<float>(290.0 - 20.0 * evi.values[i]);
        }
        GeoGrid tv_mid = compute_tvdi(mid, evi, fit);
        for (float v : tv_mid.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-3));
    }
}

TEST_CASE("tvdi edge fitting error cases") {
    SUBCASE("single EVI value cannot populate two bins") {
        GeoGrid evi = blank(4, 4, 0.5f);
        GeoGrid lst = blank(4, 4, 290.0f);
        CHECK_THROWS_AS(fit_tvdi_edges(lst, evi, 10), NumericError);
    }
    SUBCASE("dry edge dipping below wet edge is rejected") {
        GeoGrid evi = blank(2, 2);
        GeoGrid lst = blank(2, 2);
        const double es[4] = {0.0, 0.1, 0.85, 0.9};
        const double ts[4] = {5.0, 0.0, 0.0001, 0.0};
        for (int i = 0; i < 4; ++i) {
            evi.values[static_cast<std::size_t>(i)] = static_cast<float>(es[i]);
            lst.values[static_cast<std::size_t>(i)] = static_cast<float>(ts[i]);
        }
        CHECK_THROWS_AS(fit_tvdi_edges(lst, evi, 2), NumericError);
    }
    SUBCASE("degenerate edges at a pixel are rejected") {
        EdgeFit flat;
        flat.wet_intercept = 280.0;
        flat.dry_intercept = 280.0 + 1e-9;
        GeoGrid evi = blank(2, 2, 0.4f);
        GeoGrid lst = blank(2, 2, 280.0f);
        CHECK_THROWS_AS(compute_tvdi(lst, evi, flat), NumericError);
    }
    SUBCASE("tvdi output is clamped to [0,1] and propagates nodata") {
        EdgeFit fit;
        fit.wet_intercept = 280.0;
        fit.dry_intercept = 300.0;
        GeoGrid evi = blank(1, 3, 0.5f);
        GeoGrid lst = blank(1, 3);
        lst.values = {400.0f, 100.0f, 290.0f};
        evi.values[2] = evi.nodata;
        GeoGrid tv = compute_tvdi(lst, evi, fit);
        CHECK(tv.values[0] == 1.0f);
        CHECK(tv.values[1] == 0.0f);
        CHECK(tv.values[2] == tv.nodata);
    }
}

TEST_CASE("water indices follow the normalized-difference formulas") {
    GeoGrid nir = blank(1, 3);
    GeoGrid mir = blank(1, 3);
    nir.values = {0.2f, 0.3f, 0.0f};
    mir.values = {0.2f, 0.1f, 0.0f};
    GeoGrid ndwi = compute_ndwi(nir, mir);
    CHECK(ndwi.values[0] == doctest::Approx(0.0));
    CHECK(ndwi.values[1] == doctest::Approx(0.5));
    CHECK(ndwi.values[2] == ndwi.nodata);

    GeoGrid swir2 = blank(1, 3);
    swir2.values = {0.2f, 0.2f, 0.0f};
    nir.values = {0.2f, 0.4f, 0.0f};
    GeoGrid lswi = compute_lswi(nir, swir2);
    CHECK(lswi.values[0] == doctest::Approx(0.0));
    CHECK(lswi.values[1] == doctest::Approx(1.0 / 3.0));
    CHECK(lswi.values[2] == lswi.nodata);

    SUBCASE("outputs stay within [-1, 1] for reflectances in (0, 1]") {
        Rng rng(11);
        GeoGrid a = blank(8, 8);
        GeoGrid b = blank(8, 8);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            a.values[i] = static_cast<float>(uniform(rng, 0.001, 1.0));
            b.values[i] = static_cast<float>(uniform(rng, 0.001, 1.0));
        }
        GeoGrid idx = compute_ndwi(a, b);
        for (float v : idx.values) {
            CHECK(v <= 1.0f);
            CHECK(v >= -1.0f);
        }
    }
}

TEST_CASE("outlier screening flags the spike and nothing else") {
    GeoGrid g = blank(5, 5, 1.0f);
    g.at(2, 2) = 1e6f;
    GeoGrid screened = screen_outliers(g, 3, 3.0);
    // The spike deviates from its neighbor mean (all ones) by far more than
    // 3 neighbor standard deviations (zero); its neighbors see the spike in
    // their windows, which inflates their window spread enough to keep them.
    CHECK(screened.at(2, 2) == screened.nodata);
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 5; ++c) {
            if (r == 2 && c == 2) continue;
            CHECK(screened.at(r, c) == 1.0f);
        }
    }
}

TEST_CASE("outlier screening leaves constants and mild fields untouched") {
    GeoGrid g = blank(6, 6, 4.25f);
    GeoGrid s = screen_outliers(g);
    CHECK(s.values == g.values);

    Rng rng(5);
    GeoGrid mild = blank(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            mild.at(r, c) = static_cast<float>(r + c);  // smooth ramp
    GeoGrid s2 = screen_outliers(mild);
    CHECK(s2.values == mild.values);

    SUBCASE("pixels are either kept identical or set to nodata") {
        GeoGrid noisy = blank(10, 10);
        for (float& v : noisy.values) v = static_cast<float>(uniform(rng, 0.0, 1.0));
        noisy.at(4, 4) = 500.0f;
        GeoGrid out = screen_outliers(noisy);
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            const bool unchanged = out.values[i] == noisy.values[i];
            const bool masked = out.values[i] == out.nodata;
            CHECK((unchanged || masked));
        }
    }
}

TEST_CASE("idw fill reproduces hand-derived weights") {
    SUBCASE("equidistant neighbors average") {
        GeoGrid g = blank(1, 3);
        g.values = {2.0f, kDefaultNodata, 4.0f};
        GeoGrid f = idw_fill(g, 2.0, 8);
        CHECK(f.values[1] == doctest::Approx(3.0));
    }
    SUBCASE("single neighbor copies its value") {
        GeoGrid g = blank(1, 2);
        g.values = {7.0f, kDefaultNodata};
        GeoGrid f = idw_fill(g, 2.0, 1);
        CHECK(f.values[1] == 7.0f);
    }
    SUBCASE("power-2 weights at distances 1 and 2") {
        GeoGrid g = blank(1, 3);
        g.values = {kDefaultNodata, 0.0f, 3.0f};
        GeoGrid f = idw_fill(g, 2.0, 2);
        // (1*0 + 0.25*3) / 1.25
        CHECK(f.values[0] == doctest::Approx(0.6));
    }
    SUBCASE("constant field fills to the constant (weights sum to one)") {
        GeoGrid g = blank(6, 6, 2.5f);
        g.at(1, 2) = g.nodata;
        g.at(4, 4) = g.nodata;
        GeoGrid f = idw_fill(g);
        for (float v : f.values) CHECK(v == doctest::Approx(2.5));
    }
    SUBCASE("valid pixels never change and output has no holes") {
        Rng rng(9);
        GeoGrid g = blank(9, 9);
        for (float& v : g.values) v = static_cast<float>(uniform(rng, 0.0, 5.0));
        g.at(0, 0) = g.nodata;
        g.at(5, 7) = g.nodata;
        GeoGrid f = idw_fill(g);
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            CHECK(f.values[i] != f.nodata);
            if (g.values[i] != g.nodata) CHECK(f.values[i] == g.values[i]);
        }
    }
    SUBCASE("all-nodata grid is an error") {
        GeoGrid g = blank(2, 2);
        for (float& v : g.values) v = g.nodata;
        CHECK_THROWS_AS(idw_fill(g), NumericError);
    }
}

TEST_CASE("temporal aggregation is a valid-only mean") {
    GeoGrid a = blank(1, 3, 3.0f);
    GeoGrid b = blank(1, 3, 5.0f);
    a.values[1] = a.nodata;         // -> 5
    a.values[2] = a.nodata;
    b.values[2] = b.nodata;         // -> nodata
    GeoGrid m = aggregate_time({a, b});
    CHECK(m.values[0] == 4.0f);
    CHECK(m.values[1] == 5.0f);
    CHECK(m.values[2] == m.nodata);

    GeoGrid same = aggregate_time({b, b, b});
    CHECK(same.values[0] == 5.0f);
    CHECK_THROWS_AS(aggregate_time({}), InvalidArgument);
}

namespace {

std::vector<PatchPair> random_patches(int count, int p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PatchPair> out;
    for (int i = 0; i < count; ++i) {
        PatchPair pp;
        std::vector<GeoGrid> chans;
        for (int ch = 0; ch < 3; ++ch) {
            GeoGrid g = blank(p, p);
            for (float& v : g.values)
                v = static_cast<float>(uniform(rng, 0.0, 1.0) * (ch + 1) + ch);
            chans.push_back(std::move(g));
        }
        pp.input = GridStack::create(std::move(chans), {"a", "b", "c"});
        pp.label = blank(p, p, 1.0f);
        pp.lr = blank(p / 2, p / 2, 1.0f);
        out.push_back(std::move(pp));
    }
    return out;
}

}  // namespace

TEST_CASE("normalization statistics") {
    auto patches = random_patches(4, 8, 17);
    NormStats stats = fit_norm_stats(patches);
    REQUIRE(stats.nchannels() == 3);

    SUBCASE("normalized channels have mean 0 and std 1 over the fitting set") {
        for (int ch = 0; ch < 3; ++ch) {
            double sum = 0.0, sum_sq = 0.0;
            std::size_t n = 0;
            for (const auto& p : patches) {
                GeoGrid norm = apply_norm_channel(p.input.channel(ch), stats, ch);
                for (float v : norm.values) {
                    sum += v;
                    sum_sq += static_cast<double>(v) * v;
                    ++n;
                }
            }
            const double mean = sum / static_cast<double>(n);
            const double var = sum_sq / static_cast<double>(n) - mean * mean;
            CHECK(mean == doctest::Approx(0.0).epsilon(1e-4));
            CHECK(std::abs(mean) < 1e-4);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
    SUBCASE("apply then invert is the identity to 1e-5 relative") {
        const GridStack& s = patches.front().input;
        GridStack round = invert_norm(apply_norm(s, stats), stats);
        for (int ch = 0; ch < 3; ++ch) {
            for (std::size_t i = 0; i < s.channel(ch).values.size(); ++i) {
                const double orig = s.channel(ch).values[i];
                const double back = round.channel(ch).values[i];
                CHECK(std::abs(back - orig) <= 1e-5 * std::max(1.0, std::abs(orig)));
            }
        }
    }
    SUBCASE("constant channel is a zero-variance error") {
        auto flat = random_patches(3, 8, 23);
        for (auto& p : flat) {
            for (float& v : p.input.channels[1].values) v = 2.0f;
        }
        CHECK_THROWS_AS(fit_norm_stats(flat), NumericError);
    }
}
