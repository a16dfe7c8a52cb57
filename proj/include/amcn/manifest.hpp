#pragma once

#include <string>
#include <utility>
#include <vector>

namespace amcn {

// Run record written next to every command's outputs, as UTF-8 key=value
// lines. Metadata only; the declared data outputs are the reproducible
// artifacts.
struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value) {
        entries.emplace_back(key, value);
    }
    void add(const std::string& key, long long value) {
        entries.emplace_back(key, std::to_string(value));
    }
    void add(const std::string& key, double value);

    void write(const std::string& path) const;
};

}  // namespace amcn
