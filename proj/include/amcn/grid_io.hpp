#pragma once

#include <string>

#include "amcn/grid.hpp"

namespace amcn {

// AGRID binary raster format (little-endian):
//   magic "AGRD" | version u32 = 1 | nchannels u32 | nrows u32 | ncols u32 |
//   x_min f64 | y_min f64 | cell_size f64 | nodata f32 |
//   per channel: name length u16 + UTF-8 name, then nrows*ncols f32
//   values row-major, row 0 = northernmost.
// Round-trips are bit-exact, including negative zero.

void write_grid(const GridStack& stack, const std::string& path);
void write_grid(const GeoGrid& grid, const std::string& path,
                const std::string& channel_name = "");

GridStack read_grid(const std::string& path);

// Reads a single-channel file; throws FormatError on multi-channel input.
GeoGrid read_single_grid(const std::string& path);

// Station CSV with header `station_id,lon,lat,value`; a missing value is
// written as an empty field. Numeric fields round-trip exactly.
void write_stations(const StationSet& stations, const std::string& path);
StationSet read_stations(const std::string& path);

}  // namespace amcn
