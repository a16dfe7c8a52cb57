#include "amcn/net_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "amcn/error.hpp"

namespace amcn {

namespace {

constexpr std::uint32_t kModelVersion = 1;

void put_u16(std::ofstream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}
void put_i32(std::ofstream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }
void put_u64(std::ofstream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
void put_f32(std::ofstream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ofstream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

struct In {
    std::ifstream is;
    std::string path;
    explicit In(const std::string& p) : is(p, std::ios::binary), path(p) {
        if (!is) throw IoError("cannot open for reading: " + p);
    }
    void bytes(void* p, std::size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n) throw TruncatedFileError(path);
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint8_t u8() {
        unsigned char b;
        bytes(&b, 1);
        return b;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

void save_model(const AmcnNet<float>& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("AMCN", 4);
    put_u32(os, kModelVersion);
    const AmcnConfig& c = net.config;
    put_i32(os, c.base_channels);
    put_i32(os, c.n_ancillary);
    put_i32(os, c.scale_factor);
    put_i32(os, c.rdb_layers);
    put_i32(os, c.rdb_growth);
    put_i32(os, c.n_levels);
    put_i32(os, c.kernel);
    const unsigned char flags[3] = {static_cast<unsigned char>(c.use_gca),
                                    static_cast<unsigned char>(c.use_mfca),
                                    static_cast<unsigned char>(c.use_degradation_loss)};
    os.write(reinterpret_cast<const char*>(flags), 3);
    put_u32(os, static_cast<std::uint32_t>(net.norm_stats.mean.size()));
    for (std::size_t i = 0; i < net.norm_stats.mean.size(); ++i) {
        put_f64(os, net.norm_stats.mean[i]);
        put_f64(os, net.norm_stats.std_dev[i]);
    }
    put_u32(os, static_cast<std::uint32_t>(net.params.size()));
    for (const Parameter<float>& p : net.params) {
        put_u16(os, static_cast<std::uint16_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        os.put(static_cast<char>(p.tensor.shape().size()));
        for (int d : p.tensor.shape()) put_u32(os, static_cast<std::uint32_t>(d));
        for (float v : p.tensor.values()) put_f32(os, v);
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

AmcnNet<float> load_model(const std::string& path) {
    In in(path);
    char magic[4];
    in.bytes(magic, 4);
    if (std::memcmp(magic, "AMCN", 4) != 0) throw FormatError("bad model magic in " + path);
    if (in.u32() != kModelVersion) throw FormatError("unsupported model version in " + path);
    AmcnConfig cfg;
    cfg.base_channels = in.i32();
    cfg.n_ancillary = in.i32();
    cfg.scale_factor = in.i32();
    cfg.rdb_layers = in.i32();
    cfg.rdb_growth = in.i32();
    cfg.n_levels = in.i32();
    cfg.kernel = in.i32();
    cfg.use_gca = in.u8() != 0;
    cfg.use_mfca = in.u8() != 0;
    cfg.use_degradation_loss = in.u8() != 0;
    cfg.validate();

    NormStats stats;
    const std::uint32_t nch = in.u32();
    if (nch != static_cast<std::uint32_t>(cfg.n_ancillary + 1)) {
        throw FormatError("normalization channel count does not match config in " + path);
    }
    for (std::uint32_t i = 0; i < nch; ++i) {
        stats.mean.push_back(in.f64());
        stats.std_dev.push_back(in.f64());
    }

    // The expected parameter list is derived from the config; the file must
    // match it name-for-name and shape-for-shape.
    AmcnNet<float> net = AmcnNet<float>::random_init(cfg, 0);
    net.norm_stats = std::move(stats);
    const std::uint32_t nparams = in.u32();
    if (nparams != net.params.size()) {
        throw FormatError("parameter count does not match config in " + path);
    }
    for (Parameter<float>& p : net.params) {
        const std::uint16_t name_len = in.u16();
        std::string name(name_len, '\0');
        if (name_len) in.bytes(name.data(), name_len);
        if (name != p.name) {
            throw FormatError("unexpected parameter '" + name + "' in " + path);
        }
        const std::uint8_t ndim = in.u8();
        nn::Shape shape;
        for (std::uint8_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(in.u32()));
        if (shape != p.tensor.shape()) {
            throw FormatError("parameter shape mismatch for '" + name + "' in " + path);
        }
        std::vector<float>& v = p.tensor.values_mut();
        for (float& x : v) x = in.f32();
    }
    return net;
}

GeoGrid downscale_grid(const AmcnNet<float>& net, const GeoGrid& lr_precip,
                       const GridStack& ancillary) {
    lr_precip.validate();
    ancillary.validate();
    if (ancillary.nchannels() != net.config.n_ancillary) {
        throw DimensionError("ancillary stack must have 9 channels");
    }
    const auto expected = canonical_ancillary_names();
    for (int i = 0; i < ancillary.nchannels(); ++i) {
        if (ancillary.channel_names[static_cast<std::size_t>(i)] != expected[static_cast<std::size_t>(i)]) {
            throw FormatError("ancillary channels are not in canonical order (got '" +
                              ancillary.channel_names[static_cast<std::size_t>(i)] + "' at " +
                              std::to_string(i) + ")");
        }
    }
    const int r = net.config.scale_factor;
    const GeoGrid& ref = ancillary.channels.front();
    if (ref.nrows != lr_precip.nrows * r || ref.ncols != lr_precip.ncols * r ||
        ref.x_min != lr_precip.x_min || ref.y_min != lr_precip.y_min) {
        throw DimensionError("coarse precipitation does not nest into the ancillary grid");
    }

    // Nodata propagates through the bilinear stencil; computation runs on a
    // mean-filled copy and the mask is applied afterwards.
    GeoGrid up = bilinear_resample(lr_precip, r, 1);
    const int H = ref.nrows, W = ref.ncols;
    std::vector<bool> mask(static_cast<std::size_t>(H) * W, false);
    std::vector<float> up_vals(up.values);
    for (std::size_t i = 0; i < up_vals.size(); ++i) {
        if (up_vals[i] == up.nodata) {
            mask[i] = true;
            up_vals[i] = static_cast<float>(net.norm_stats.mean[0]);
        }
    }
    std::vector<float> anc_vals;
    anc_vals.reserve(static_cast<std::size_t>(net.config.n_ancillary) * H * W);
    for (int ch = 0; ch < net.config.n_ancillary; ++ch) {
        const GeoGrid& g = ancillary.channel(ch);
        const double fill = net.norm_stats.mean[static_cast<std::size_t>(ch + 1)];
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            float v = g.values[i];
            if (v == g.nodata) {
                mask[i] = true;
                v = static_cast<float>(fill);
            }
            anc_vals.push_back(v);
        }
    }

    auto up_t = nn::Tensor<float>::leaf({1, 1, H, W}, std::move(up_vals));
    auto anc_t = nn::Tensor<float>::leaf({1, net.config.n_ancillary, H, W}, std::move(anc_vals));
    AmcnForward<float> out = net.forward_from_up(up_t, anc_t);

    GeoGrid result = up;
    for (std::size_t i = 0; i < result.values.size(); ++i) {
        result.values[i] = mask[i] ? result.nodata : out.pred_hr.values()[i];
    }
    return result;
}

}  // namespace amcn
