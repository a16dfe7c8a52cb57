#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "amcn/error.hpp"
#include "amcn/grid.hpp"
#include "amcn/grid_io.hpp"
#include "amcn/rng.hpp"

using namespace amcn;

namespace {

GeoGrid make_grid(int nrows, int ncols, float fill, double cell = 0.5) {
    return GeoGrid::create(nrows, ncols, 100.0, 30.0, cell, kDefaultNodata,
                           std::vector<float>(static_cast<std::size_t>(nrows) * ncols, fill));
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string tmp_path(const char* name) { return std::string("tgrid_") + name; }

}  // namespace

TEST_CASE("agrid round-trip identity") {
    GeoGrid g = make_grid(3, 4, 7.5f);
    const std::string path = tmp_path("roundtrip.agrid");
    write_grid(g, path, "x");
    GridStack back = read_grid(path);
    REQUIRE(back.nchannels() == 1);
    CHECK(back.channel_names[0] == "x");
    const GeoGrid& r = back.channel(0);
    CHECK(r.same_geometry(g));
    CHECK(r.nodata == g.nodata);
    CHECK(r.values == g.values);
    std::remove(path.c_str());
}

TEST_CASE("agrid round-trip is bit-exact for arbitrary floats including negative zero") {
    Rng rng(42);
    GeoGrid g = make_grid(7, 5, 0.0f);
    for (float& v : g.values) v = static_cast<float>(uniform(rng, -50.0, 50.0));
    g.values[3] = -0.0f;
    g.values[9] = g.nodata;
    const std::string path = tmp_path("bits.agrid");
    write_grid(g, path);
    GeoGrid r = read_single_grid(path);
    REQUIRE(r.values.size() == g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        std::uint32_t a, b;
        std::memcpy(&a, &g.values[i], 4);
        std::memcpy(&b, &r.values[i], 4);
        CHECK(a == b);
    }
    // second write is byte-identical
    const std::string path2 = tmp_path("bits2.agrid");
    write_grid(r, path2);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("agrid header errors are distinct") {
    GeoGrid g = make_grid(2, 2, 1.0f);
    const std::string path = tmp_path("hdr.agrid");
    write_grid(g, path);
    auto bytes = slurp(path);

    SUBCASE("bad magic") {
        auto bad = bytes;
        bad[0] = 'X';
        bad[1] = 'X';
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bad.data()),
                   static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_AS(read_grid(path), FormatError);
    }
    SUBCASE("zero columns") {
        auto bad = bytes;
        // ncols field sits after magic(4) + version(4) + nchannels(4) + nrows(4)
        for (int i = 0; i < 4; ++i) bad[16 + static_cast<std::size_t>(i)] = 0;
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bad.data()),
                   static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_AS(read_grid(path), DimensionError);
    }
    SUBCASE("truncated payload") {
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size() - 6));
        CHECK_THROWS_AS(read_grid(path), TruncatedFileError);
    }
    std::remove(path.c_str());
}

TEST_CASE("agrid writes the declared layout") {
    SUBCASE("1x1 zero grid payload is 4 zero bytes") {
        GeoGrid g = make_grid(1, 1, 0.0f);
        const std::string path = tmp_path("single.agrid");
        write_grid(g, path);
        auto bytes = slurp(path);
        // header 48 bytes + name length 2 + 4 payload bytes
        REQUIRE(bytes.size() == 54);
        CHECK(bytes[50] == 0);
        CHECK(bytes[51] == 0);
        CHECK(bytes[52] == 0);
        CHECK(bytes[53] == 0);
        std::remove(path.c_str());
    }
    SUBCASE("10-channel stack records nchannels = 10") {
        std::vector<GeoGrid> chans;
        std::vector<std::string> names;
        for (int i = 0; i < 10; ++i) {
            chans.push_back(make_grid(2, 2, static_cast<float>(i)));
            names.push_back("c" + std::to_string(i));
        }
        GridStack s = GridStack::create(chans, names);
        const std::string path = tmp_path("stack.agrid");
        write_grid(s, path);
        auto bytes = slurp(path);
        CHECK(bytes[8] == 10);
        CHECK(bytes[9] == 0);
        GridStack back = read_grid(path);
        CHECK(back.nchannels() == 10);
        CHECK(back.channel_names == names);
        std::remove(path.c_str());
    }
}

TEST_CASE("bilinear resample preserves constants") {
    GeoGrid g = make_grid(4, 4, 5.0f);
    GeoGrid up = bilinear_resample(g, 10, 1);
    REQUIRE(up.nrows == 40);
    REQUIRE(up.ncols == 40);
    CHECK(up.cell_size == doctest::Approx(g.cell_size / 10.0));
    for (float v : up.values) CHECK(v == 5.0f);

    GeoGrid down = bilinear_resample(up, 1, 10);
    REQUIRE(down.nrows == 4);
    for (float v : down.values) CHECK(v == 5.0f);
}

TEST_CASE("bilinear upsample is exact on an affine ramp in the interior") {
    GeoGrid g = make_grid(4, 8, 0.0f);
    for (int r = 0; r < g.nrows; ++r)
        for (int c = 0; c < g.ncols; ++c) g.at(r, c) = static_cast<float>(c);
    GeoGrid up = bilinear_resample(g, 2, 1);
    for (int r = 0; r < up.nrows; ++r) {
        for (int c = 2; c < up.ncols - 2; ++c) {
            const double s = (c + 0.5) / 2.0 - 0.5;  // source-index coordinate
            CHECK(up.at(r, c) == doctest::Approx(s).epsilon(1e-6));
        }
    }
}

TEST_CASE("bilinear downsample dimensions and preconditions") {
    GeoGrid g = make_grid(40, 40, 1.0f);
    GeoGrid down = bilinear_resample(g, 1, 10);
    CHECK(down.nrows == 4);
    CHECK(down.ncols == 4);
    CHECK_THROWS_AS(bilinear_resample(make_grid(5, 5, 1.0f), 1, 2), DimensionError);
    CHECK_THROWS_AS(bilinear_resample(g, 2, 3), InvalidArgument);
}

TEST_CASE("nodata propagates through touched stencils only") {
    GeoGrid g = make_grid(4, 4, 2.0f);
    g.at(1, 1) = g.nodata;
    GeoGrid up = bilinear_resample(g, 2, 1);
    int holes = 0;
    for (float v : up.values) holes += (v == up.nodata);
    CHECK(holes > 0);
    // far corner untouched by the hole's stencil
    CHECK(up.at(7, 7) == 2.0f);
}

TEST_CASE("coordinate channels hold pixel centers") {
    GeoGrid t = GeoGrid::create(1, 1, 100.0, 30.0, 1.0);
    auto [lon, lat] = make_coordinate_channels(t);
    CHECK(lon.at(0, 0) == doctest::Approx(100.5));
    CHECK(lat.at(0, 0) == doctest::Approx(30.5));

    GeoGrid t2 = make_grid(3, 4, 0.0f);
    auto [lon2, lat2] = make_coordinate_channels(t2);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) {
            CHECK(lon2.at(r, c) == lon2.at(0, c));  // varies only with column
            CHECK(lat2.at(r, c) == lat2.at(r, 0));
        }
    for (int r = 1; r < 3; ++r) CHECK(lat2.at(r, 0) < lat2.at(r - 1, 0));  // north-up
}

namespace {

struct PatchFixture {
    GridStack input;
    GeoGrid label;
    GeoGrid lr;
};

PatchFixture patch_fixture(int n, int r) {
    GeoGrid label = make_grid(n, n, 1.0f);
    Rng rng(7);
    for (float& v : label.values) v = static_cast<float>(uniform(rng, 0.0, 9.0));
    GeoGrid lr = bilinear_resample(label, 1, r);
    GeoGrid ch2 = make_grid(n, n, 3.0f);
    GridStack input = GridStack::create({label, ch2}, {"a", "b"});
    return {input, label, lr};
}

}  // namespace

TEST_CASE("patch extraction tiles and drops nodata tiles") {
    auto fx = patch_fixture(80, 10);
    auto patches = extract_patches(fx.input, fx.label, fx.lr, 40, 40);
    REQUIRE(patches.size() == 4);
    CHECK(patches.front().lr.nrows == 4);
    CHECK(patches.front().lr.ncols == 4);
    for (const auto& p : patches) CHECK(p.valid);

    // stride = p footprints do not overlap: corners are distinct
    for (std::size_t i = 0; i < patches.size(); ++i) {
        for (std::size_t j = i + 1; j < patches.size(); ++j) {
            const bool same = patches[i].label.x_min == patches[j].label.x_min &&
                              patches[i].label.y_min == patches[j].label.y_min;
            CHECK_FALSE(same);
        }
    }

    SUBCASE("one nodata pixel removes exactly its tile") {
        auto fx2 = patch_fixture(80, 10);
        fx2.input.channels[1].at(5, 5) = fx2.input.channels[1].nodata;
        auto reduced = extract_patches(fx2.input, fx2.label, fx2.lr, 40, 40);
        CHECK(reduced.size() == 3);
    }
    SUBCASE("count matches the closed-form tiling formula") {
        for (int stride : {10, 20, 40}) {
            auto got = extract_patches(fx.input, fx.label, fx.lr, 40, stride);
            const std::size_t per_axis = static_cast<std::size_t>((80 - 40) / stride) + 1;
            CHECK(got.size() == per_axis * per_axis);
        }
    }
}

TEST_CASE("station sampling uses half-open west/south-inclusive cells") {
    GeoGrid g = GeoGrid::create(2, 2, 0.0, 0.0, 1.0, kDefaultNodata,
                                {1.0f, 2.0f,    // north row
                                 3.0f, 4.0f});  // south row
    StationSet st;
    st.records.push_back({"center", 0.5, 1.5, 5.0});     // pixel (0,0)
    st.records.push_back({"edge", 1.0, 0.5, 5.0});       // shared edge -> east cell
    st.records.push_back({"boundary", 2.0, 2.0, 5.0});   // far corner -> last cell
    auto got = sample_at_stations(g, st);
    REQUIRE(got.size() == 3);
    CHECK(*got[0].second == 1.0f);
    CHECK(*got[1].second == 4.0f);
    CHECK(*got[2].second == 2.0f);

    SUBCASE("constant grid samples the constant") {
        GeoGrid c9 = make_grid(3, 3, 9.0f, 1.0);
        StationSet one;
        one.records.push_back({"s", c9.lon_center(1), c9.lat_center(1), 1.0});
        CHECK(*sample_at_stations(c9, one)[0].second == 9.0f);
    }
    SUBCASE("nodata pixel yields missing") {
        GeoGrid h = make_grid(2, 2, 1.0f, 1.0);
        h.at(0, 0) = h.nodata;
        StationSet one;
        one.records.push_back({"s", h.lon_center(0), h.lat_center(0), 1.0});
        CHECK_FALSE(sample_at_stations(h, one)[0].second.has_value());
    }
    SUBCASE("outside the extent throws") {
        StationSet bad;
        bad.records.push_back({"s", -1.0, 0.5, 1.0});
        CHECK_THROWS_AS(sample_at_stations(g, bad), InvalidArgument);
    }
}

TEST_CASE("station csv round-trips values and missing fields") {
    StationSet st;
    st.records.push_back({"A", 100.125, 30.5, 42.75});
    st.records.push_back({"B", 101.0, 31.0, std::nullopt});
    const std::string path = tmp_path("stations.csv");
    write_stations(st, path);
    StationSet back = read_stations(path);
    REQUIRE(back.size() == 2);
    CHECK(back.records[0].id == "A");
    CHECK(back.records[0].lon == 100.125);
    CHECK(*back.records[0].value == 42.75);
    CHECK_FALSE(back.records[1].value.has_value());
    std::remove(path.c_str());
}

TEST_CASE("grid invariants are enforced") {
    CHECK_THROWS_AS(GeoGrid::create(0, 3, 0, 0, 1.0), DimensionError);
    CHECK_THROWS_AS(GeoGrid::create(2, 2, 0, 0, -1.0), InvalidArgument);
    std::vector<float> vals{1.0f, 2.0f, 3.0f};
    CHECK_THROWS_AS(GeoGrid::create(2, 2, 0, 0, 1.0, kDefaultNodata, vals), DimensionError);
    std::vector<float> inf_vals{1.0f, std::numeric_limits<float>::infinity(), 1.0f, 1.0f};
    CHECK_THROWS_AS(GeoGrid::create(2, 2, 0, 0, 1.0, kDefaultNodata, inf_vals), NumericError);
}
