#pragma once

#include <cmath>

// Pixel-center alignment shared by the raster resampler and the
// differentiable tensor resize, so the two stay numerically identical.

namespace amcn::detail {

struct AxisSample {
    int i0;
    int i1;
    double w1;  // weight of i1; weight of i0 is 1 - w1
};

// Maps output pixel center `out_index` into source index space for a
// source-per-output scale (src_len / out_len) and clamps at the borders.
inline AxisSample axis_sample(int out_index, int n_src, double scale) {
    double s = (out_index + 0.5) * scale - 0.5;
    double fl = std::floor(s);
    int i0 = static_cast<int>(fl);
    double w1 = s - fl;
    int i1 = i0 + 1;
    if (i0 < 0) {
        i0 = 0;
        i1 = 0;
        w1 = 0.0;
    } else if (i1 > n_src - 1) {
        i1 = n_src - 1;
        i0 = n_src - 1;
        w1 = 0.0;
    }
    return {i0, i1, w1};
}

}  // namespace amcn::detail
