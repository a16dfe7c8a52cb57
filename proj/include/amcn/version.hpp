#pragma once

namespace amcn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace amcn
