#pragma once

#include <string>

#include "amcn/net.hpp"

namespace amcn {

// AMCN model binary format (little-endian):
//   magic "AMCN" | version u32 = 1 |
//   config: 7 x i32 (C, n_ancillary, scale, rdb_layers, growth, n_levels,
//   kernel) + 3 x u8 flags (gca, mfca, degradation) |
//   nchannels u32 + per channel mean f64 + std f64 |
//   nparams u32 | per param: name u16+bytes, ndim u8, dims u32, payload f32.
// Round-trips bit-exactly.
void save_model(const AmcnNet<float>& net, const std::string& path);
AmcnNet<float> load_model(const std::string& path);

// Downscales a coarse precipitation grid against a canonical 9-channel
// ancillary stack. Nodata in any input propagates to the output.
GeoGrid downscale_grid(const AmcnNet<float>& net, const GeoGrid& lr_precip,
                       const GridStack& ancillary);

}  // namespace amcn
