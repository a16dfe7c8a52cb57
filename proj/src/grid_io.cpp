#include "amcn/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "amcn/error.hpp"

namespace amcn {

namespace {

constexpr std::uint32_t kAgridVersion = 1;
constexpr std::uint32_t kMaxChannels = 4096;

// Explicit little-endian encoding keeps the files byte-identical on any host.
struct Writer {
    std::ofstream os;

    explicit Writer(const std::string& path) : os(path, std::ios::binary) {
        if (!os) throw IoError("cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u16(std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
        bytes(b, 2);
    }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void finish(const std::string& path) {
        os.flush();
        if (!os) throw IoError("write failed: " + path);
    }
};

struct Reader {
    std::ifstream is;
    std::string path;

    explicit Reader(const std::string& p) : is(p, std::ios::binary), path(p) {
        if (!is) throw IoError("cannot open for reading: " + p);
    }
    void bytes(void* p, std::size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n) {
            throw TruncatedFileError(path);
        }
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
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_grid(const GridStack& stack, const std::string& path) {
    stack.validate();
    if (stack.channels.size() > kMaxChannels) {
        throw DimensionError("too many channels");
    }
    const GeoGrid& first = stack.channels.front();
    Writer w(path);
    w.bytes("AGRD", 4);
    w.u32(kAgridVersion);
    w.u32(static_cast<std::uint32_t>(stack.channels.size()));
    w.u32(static_cast<std::uint32_t>(first.nrows));
    w.u32(static_cast<std::uint32_t>(first.ncols));
    w.f64(first.x_min);
    w.f64(first.y_min);
    w.f64(first.cell_size);
    w.f32(first.nodata);
    for (std::size_t i = 0; i < stack.channels.size(); ++i) {
        const std::string& name = stack.channel_names[i];
        if (name.size() > 0xffff) throw FormatError("channel name too long");
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        for (float v : stack.channels[i].values) w.f32(v);
    }
    w.finish(path);
}

void write_grid(const GeoGrid& grid, const std::string& path, const std::string& channel_name) {
    write_grid(GridStack::create({grid}, {channel_name}), path);
}

GridStack read_grid(const std::string& path) {
    Reader rd(path);
    char magic[4];
    rd.bytes(magic, 4);
    if (std::memcmp(magic, "AGRD", 4) != 0) {
        throw FormatError("bad magic in " + path);
    }
    const std::uint32_t version = rd.u32();
    if (version != kAgridVersion) {
        throw FormatError("unsupported AGRID version in " + path);
    }
    const std::uint32_t nchannels = rd.u32();
    const std::uint32_t nrows = rd.u32();
    const std::uint32_t ncols = rd.u32();
    const double x_min = rd.f64();
    const double y_min = rd.f64();
    const double cell = rd.f64();
    const float nodata = rd.f32();
    if (nchannels == 0 || nchannels > kMaxChannels) {
        throw DimensionError("channel count out of range in " + path);
    }
    if (nrows == 0 || ncols == 0 ||
        static_cast<std::uint64_t>(nrows) * ncols > (std::uint64_t{1} << 27)) {
        throw DimensionError("grid dimension out of range in " + path);
    }

    std::vector<GeoGrid> channels;
    std::vector<std::string> names;
    channels.reserve(nchannels);
    for (std::uint32_t ch = 0; ch < nchannels; ++ch) {
        const std::uint16_t name_len = rd.u16();
        std::string name(name_len, '\0');
        if (name_len > 0) rd.bytes(name.data(), name_len);
        GeoGrid g;
        g.nrows = static_cast<int>(nrows);
        g.ncols = static_cast<int>(ncols);
        g.x_min = x_min;
        g.y_min = y_min;
        g.cell_size = cell;
        g.nodata = nodata;
        g.values.resize(g.size());
        for (float& v : g.values) v = rd.f32();
        g.validate();
        channels.push_back(std::move(g));
        names.push_back(std::move(name));
    }
    return GridStack::create(std::move(channels), std::move(names));
}

GeoGrid read_single_grid(const std::string& path) {
    GridStack s = read_grid(path);
    if (s.channels.size() != 1) {
        throw FormatError("expected a single-channel file: " + path);
    }
    return std::move(s.channels.front());
}

void write_stations(const StationSet& stations, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "station_id,lon,lat,value\n";
    for (const StationRecord& st : stations.records) {
        os << st.id << ',' << format_double(st.lon) << ',' << format_double(st.lat) << ',';
        if (st.value.has_value()) os << format_double(*st.value);
        os << '\n';
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

StationSet read_stations(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty station file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "station_id,lon,lat,value") {
        throw FormatError("bad station CSV header in " + path);
    }
    StationSet out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (fields.size() != 4) {
            throw FormatError("expected 4 fields at " + path + ":" + std::to_string(line_no));
        }
        StationRecord st;
        st.id = fields[0];
        try {
            st.lon = std::stod(fields[1]);
            st.lat = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw FormatError("bad coordinate at " + path + ":" + std::to_string(line_no));
        }
        if (!fields[3].empty()) {
            double v = 0.0;
            try {
                v = std::stod(fields[3]);
            } catch (const std::exception&) {
                throw FormatError("bad value at " + path + ":" + std::to_string(line_no));
            }
            if (v < 0.0) {
                throw FormatError("negative station value at " + path + ":" +
                                  std::to_string(line_no));
            }
            st.value = v;
        }
        out.records.push_back(std::move(st));
    }
    return out;
}

}  // namespace amcn
