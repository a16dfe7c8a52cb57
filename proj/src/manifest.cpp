#include "amcn/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "amcn/error.hpp"
#include "amcn/version.hpp"

namespace amcn {

void RunManifest::add(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    entries.emplace_back(key, buf);
}

void RunManifest::write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "command=" << command << '\n';
    os << "toolkit_version=" << kVersion << '\n';
    for (const auto& [k, v] : entries) {
        os << k << '=' << v << '\n';
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace amcn
