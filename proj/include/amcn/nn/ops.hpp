#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "amcn/detail/resample.hpp"
#include "amcn/nn/tensor.hpp"

namespace amcn::nn {

namespace detail_ops {

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!same_shape(a.shape(), b.shape())) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op) {
    if (t.shape().size() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got " + shape_str(t.shape()));
    }
}

}  // namespace detail_ops

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail_ops::require_same(a, b, "add");
    std::vector<T> out(a.size());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    auto pa = a.node(), pb = b.node();
    return detail::make_op<T>(
        a.shape(), std::move(out), {pa, pb},
        [pa, pb](Node<T>& n) {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] += n.grad[i];
        },
        "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail_ops::require_same(a, b, "sub");
    std::vector<T> out(a.size());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    auto pa = a.node(), pb = b.node();
    return detail::make_op<T>(
        a.shape(), std::move(out), {pa, pb},
        [pa, pb](Node<T>& n) {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] -= n.grad[i];
        },
        "sub");
}

template <typename T>
Tensor<T> elementwise_mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail_ops::require_same(a, b, "elementwise_mul");
    std::vector<T> out(a.size());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    auto pa = a.node(), pb = b.node();
    return detail::make_op<T>(
        a.shape(), std::move(out), {pa, pb},
        [pa, pb](Node<T>& n) {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pa->grad[i] += n.grad[i] * pb->value[i];
            if (pb->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pb->grad[i] += n.grad[i] * pa->value[i];
        },
        "elementwise_mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    std::vector<T> out(a.size());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
    auto pa = a.node();
    return detail::make_op<T>(
        a.shape(), std::move(out), {pa},
        [pa, factor](Node<T>& n) {
            if (pa->requires_grad)
                for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * factor;
        },
        "scale");
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> out(a.size());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T(0) ? av[i] : T(0);
    auto pa = a.node();
    return detail::make_op<T>(
        a.shape(), std::move(out), {pa},
        [pa](Node<T>& n) {
            if (!pa->requires_grad) return;
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                if (pa->value[i] > T(0)) pa->grad[i] += n.grad[i];
        },
        "relu");
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> out(a.size());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-av[i]));
    auto pa = a.node();
    return detail::make_op<T>(
        a.shape(), std::move(out), {pa},
        [pa](Node<T>& n) {
            if (!pa->requires_grad) return;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                const T s = n.value[i];
                pa->grad[i] += n.grad[i] * s * (T(1) - s);
            }
        },
        "sigmoid");
}

// Size-preserving cross-correlation with bias. x is (B, Cin, H, W),
// w is (Cout, Cin, k, k) with k odd, b is (Cout); padding must be (k-1)/2.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int padding) {
    detail_ops::require_rank(x, 4, "conv2d");
    detail_ops::require_rank(w, 4, "conv2d");
    detail_ops::require_rank(b, 1, "conv2d");
    const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != Cin) throw DimensionError("conv2d: channel mismatch");
    if (w.dim(3) != k || k % 2 == 0) throw DimensionError("conv2d: kernel must be odd and square");
    if (b.dim(0) != Cout) throw DimensionError("conv2d: bias size mismatch");
    if (padding != (k - 1) / 2) throw InvalidArgument("conv2d: padding must be (k-1)/2");

    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(static_cast<std::size_t>(B) * Cout * plane);
    const T* xv = x.values().data();
    const T* wv = w.values().data();
    const T* bv = b.values().data();

    for (int bi = 0; bi < B; ++bi) {
        for (int co = 0; co < Cout; ++co) {
            T* o = out.data() + (static_cast<std::size_t>(bi) * Cout + co) * plane;
            const T bias = bv[co];
            for (std::size_t i = 0; i < plane; ++i) o[i] = bias;
            for (int ci = 0; ci < Cin; ++ci) {
                const T* xp = xv + (static_cast<std::size_t>(bi) * Cin + ci) * plane;
                const T* wp = wv + ((static_cast<std::size_t>(co) * Cin + ci) * k) * k;
                for (int kh = 0; kh < k; ++kh) {
                    for (int kw = 0; kw < k; ++kw) {
                        const T wval = wp[kh * k + kw];
                        const int dw = kw - padding;
                        const int ow_lo = std::max(0, -dw);
                        const int ow_hi = std::min(W, W - dw);
                        for (int oh = 0; oh < H; ++oh) {
                            const int ih = oh + kh - padding;
                            if (ih < 0 || ih >= H) continue;
                            T* orow = o + static_cast<std::size_t>(oh) * W;
                            const T* xrow = xp + static_cast<std::size_t>(ih) * W + dw;
                            for (int ow = ow_lo; ow < ow_hi; ++ow) {
                                orow[ow] += wval * xrow[ow];
                            }
                        }
                    }
                }
            }
        }
    }

    auto px = x.node(), pw = w.node(), pb = b.node();
    Shape out_shape{B, Cout, H, W};
    return detail::make_op<T>(
        std::move(out_shape), std::move(out), {px, pw, pb},
        [px, pw, pb, B, Cin, Cout, H, W, k, padding, plane](Node<T>& n) {
            const T* g = n.grad.data();
            const T* xv = px->value.data();
            const T* wv = pw->value.data();
            if (pb->requires_grad) {
                for (int bi = 0; bi < B; ++bi) {
                    for (int co = 0; co < Cout; ++co) {
                        const T* gp = g + (static_cast<std::size_t>(bi) * Cout + co) * plane;
                        T acc = T(0);
                        for (std::size_t i = 0; i < plane; ++i) acc += gp[i];
                        pb->grad[co] += acc;
                    }
                }
            }
            const bool need_x = px->requires_grad;
            const bool need_w = pw->requires_grad;
            if (!need_x && !need_w) return;
            for (int bi = 0; bi < B; ++bi) {
                for (int co = 0; co < Cout; ++co) {
                    const T* gp = g + (static_cast<std::size_t>(bi) * Cout + co) * plane;
                    for (int ci = 0; ci < Cin; ++ci) {
                        const T* xp = xv + (static_cast<std::size_t>(bi) * Cin + ci) * plane;
                        T* dxp = need_x
                                     ? px->grad.data() +
                                           (static_cast<std::size_t>(bi) * Cin + ci) * plane
                                     : nullptr;
                        const std::size_t wbase = (static_cast<std::size_t>(co) * Cin + ci) *
                                                  static_cast<std::size_t>(k) * k;
                        for (int kh = 0; kh < k; ++kh) {
                            for (int kw = 0; kw < k; ++kw) {
                                const int dw = kw - padding;
                                const int ow_lo = std::max(0, -dw);
                                const int ow_hi = std::min(W, W - dw);
                                const T wval = wv[wbase + static_cast<std::size_t>(kh) * k + kw];
                                // Four independent accumulator chains in a
                                // fixed order: deterministic and amenable to
                                // vectorization, unlike one serial reduction.
                                T acc[4] = {T(0), T(0), T(0), T(0)};
                                for (int oh = 0; oh < H; ++oh) {
                                    const int ih = oh + kh - padding;
                                    if (ih < 0 || ih >= H) continue;
                                    const T* grow = gp + static_cast<std::size_t>(oh) * W;
                                    const T* xrow = xp + static_cast<std::size_t>(ih) * W + dw;
                                    if (need_w) {
                                        int ow = ow_lo;
                                        for (; ow + 4 <= ow_hi; ow += 4) {
                                            acc[0] += grow[ow] * xrow[ow];
                                            acc[1] += grow[ow + 1] * xrow[ow + 1];
                                            acc[2] += grow[ow + 2] * xrow[ow + 2];
                                            acc[3] += grow[ow + 3] * xrow[ow + 3];
                                        }
                                        for (; ow < ow_hi; ++ow) acc[0] += grow[ow] * xrow[ow];
                                    }
                                    if (need_x) {
                                        T* dxrow = dxp + static_cast<std::size_t>(ih) * W + dw;
                                        for (int ow = ow_lo; ow < ow_hi; ++ow)
                                            dxrow[ow] += wval * grow[ow];
                                    }
                                }
                                if (need_w)
                                    pw->grad[wbase + static_cast<std::size_t>(kh) * k + kw] +=
                                        (acc[0] + acc[1]) + (acc[2] + acc[3]);
                            }
                        }
                    }
                }
            }
        },
        "conv2d");
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_channels: empty input");
    detail_ops::require_rank(parts.front(), 4, "concat_channels");
    const int B = parts.front().dim(0), H = parts.front().dim(2), W = parts.front().dim(3);
    int Ctot = 0;
    for (const auto& p : parts) {
        detail_ops::require_rank(p, 4, "concat_channels");
        if (p.dim(0) != B || p.dim(2) != H || p.dim(3) != W) {
            throw DimensionError("concat_channels: batch/spatial dims differ");
        }
        Ctot += p.dim(1);
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(static_cast<std::size_t>(B) * Ctot * plane);
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::vector<int> chans;
    parents.reserve(parts.size());
    for (const auto& p : parts) {
        parents.push_back(p.node());
        chans.push_back(p.dim(1));
    }
    for (int bi = 0; bi < B; ++bi) {
        int c_off = 0;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
            const int C = chans[pi];
            const T* src = parts[pi].values().data() +
                           static_cast<std::size_t>(bi) * C * plane;
            T* dst = out.data() + (static_cast<std::size_t>(bi) * Ctot + c_off) * plane;
            std::copy(src, src + static_cast<std::size_t>(C) * plane, dst);
            c_off += C;
        }
    }
    return detail::make_op<T>(
        Shape{B, Ctot, H, W}, std::move(out), parents,
        [parents, chans, B, Ctot, plane](Node<T>& n) {
            for (int bi = 0; bi < B; ++bi) {
                int c_off = 0;
                for (std::size_t pi = 0; pi < parents.size(); ++pi) {
                    const int C = chans[pi];
                    if (parents[pi]->requires_grad) {
                        const T* g = n.grad.data() +
                                     (static_cast<std::size_t>(bi) * Ctot + c_off) * plane;
                        T* dst = parents[pi]->grad.data() +
                                 static_cast<std::size_t>(bi) * C * plane;
                        for (std::size_t i = 0; i < static_cast<std::size_t>(C) * plane; ++i)
                            dst[i] += g[i];
                    }
                    c_off += C;
                }
            }
        },
        "concat_channels");
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1) {
    detail_ops::require_rank(x, 4, "slice_channels");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (c0 < 0 || c1 > C || c0 >= c1) throw InvalidArgument("slice_channels: bad range");
    const int Cs = c1 - c0;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(static_cast<std::size_t>(B) * Cs * plane);
    for (int bi = 0; bi < B; ++bi) {
        const T* src = x.values().data() + (static_cast<std::size_t>(bi) * C + c0) * plane;
        T* dst = out.data() + static_cast<std::size_t>(bi) * Cs * plane;
        std::copy(src, src + static_cast<std::size_t>(Cs) * plane, dst);
    }
    auto px = x.node();
    return detail::make_op<T>(
        Shape{B, Cs, H, W}, std::move(out), {px},
        [px, B, C, c0, Cs, plane](Node<T>& n) {
            if (!px->requires_grad) return;
            for (int bi = 0; bi < B; ++bi) {
                const T* g = n.grad.data() + static_cast<std::size_t>(bi) * Cs * plane;
                T* dst = px->grad.data() + (static_cast<std::size_t>(bi) * C + c0) * plane;
                for (std::size_t i = 0; i < static_cast<std::size_t>(Cs) * plane; ++i)
                    dst[i] += g[i];
            }
        },
        "slice_channels");
}

// (B, C, H, W) -> (B, C): mean over the spatial plane.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    detail_ops::require_rank(x, 4, "global_avg_pool");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(static_cast<std::size_t>(B) * C);
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            const T* p = x.values().data() + (static_cast<std::size_t>(bi) * C + c) * plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            out[static_cast<std::size_t>(bi) * C + c] =
                static_cast<T>(acc / static_cast<double>(plane));
        }
    }
    auto px = x.node();
    return detail::make_op<T>(
        Shape{B, C}, std::move(out), {px},
        [px, B, C, plane](Node<T>& n) {
            if (!px->requires_grad) return;
            const T inv = static_cast<T>(1.0 / static_cast<double>(plane));
            for (int bi = 0; bi < B; ++bi) {
                for (int c = 0; c < C; ++c) {
                    const T g = n.grad[static_cast<std::size_t>(bi) * C + c] * inv;
                    T* dst = px->grad.data() + (static_cast<std::size_t>(bi) * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) dst[i] += g;
                }
            }
        },
        "global_avg_pool");
}

// Affine map on (B, F_in) with w (F_out, F_in) and b (F_out).
template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    detail_ops::require_rank(x, 2, "fully_connected");
    detail_ops::require_rank(w, 2, "fully_connected");
    detail_ops::require_rank(b, 1, "fully_connected");
    const int B = x.dim(0), Fin = x.dim(1), Fout = w.dim(0);
    if (w.dim(1) != Fin || b.dim(0) != Fout) {
        throw DimensionError("fully_connected: shape mismatch");
    }
    std::vector<T> out(static_cast<std::size_t>(B) * Fout);
    const T* xv = x.values().data();
    const T* wv = w.values().data();
    const T* bv = b.values().data();
    for (int bi = 0; bi < B; ++bi) {
        for (int fo = 0; fo < Fout; ++fo) {
            T acc = bv[fo];
            const T* xrow = xv + static_cast<std::size_t>(bi) * Fin;
            const T* wrow = wv + static_cast<std::size_t>(fo) * Fin;
            for (int fi = 0; fi < Fin; ++fi) acc += wrow[fi] * xrow[fi];
            out[static_cast<std::size_t>(bi) * Fout + fo] = acc;
        }
    }
    auto px = x.node(), pw = w.node(), pb = b.node();
    return detail::make_op<T>(
        Shape{B, Fout}, std::move(out), {px, pw, pb},
        [px, pw, pb, B, Fin, Fout](Node<T>& n) {
            for (int bi = 0; bi < B; ++bi) {
                for (int fo = 0; fo < Fout; ++fo) {
                    const T g = n.grad[static_cast<std::size_t>(bi) * Fout + fo];
                    if (pb->requires_grad) pb->grad[fo] += g;
                    const T* xrow = px->value.data() + static_cast<std::size_t>(bi) * Fin;
                    const T* wrow = pw->value.data() + static_cast<std::size_t>(fo) * Fin;
                    if (pw->requires_grad) {
                        T* dw = pw->grad.data() + static_cast<std::size_t>(fo) * Fin;
                        for (int fi = 0; fi < Fin; ++fi) dw[fi] += g * xrow[fi];
                    }
                    if (px->requires_grad) {
                        T* dx = px->grad.data() + static_cast<std::size_t>(bi) * Fin;
                        for (int fi = 0; fi < Fin; ++fi) dx[fi] += g * wrow[fi];
                    }
                }
            }
        },
        "fully_connected");
}

// y[b,c,h,w] = x[b,c,h,w] * gate[b,c]; gate is (B, C).
template <typename T>
Tensor<T> mul_channel_gate(const Tensor<T>& x, const Tensor<T>& gate) {
    detail_ops::require_rank(x, 4, "mul_channel_gate");
    detail_ops::require_rank(gate, 2, "mul_channel_gate");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (gate.dim(0) != B || gate.dim(1) != C) {
        throw DimensionError("mul_channel_gate: gate shape mismatch");
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(x.size());
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            const T g = gate.values()[static_cast<std::size_t>(bi) * C + c];
            const T* src = x.values().data() + (static_cast<std::size_t>(bi) * C + c) * plane;
            T* dst = out.data() + (static_cast<std::size_t>(bi) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * g;
        }
    }
    auto px = x.node(), pg = gate.node();
    return detail::make_op<T>(
        x.shape(), std::move(out), {px, pg},
        [px, pg, B, C, plane](Node<T>& n) {
            for (int bi = 0; bi < B; ++bi) {
                for (int c = 0; c < C; ++c) {
                    const std::size_t base = (static_cast<std::size_t>(bi) * C + c) * plane;
                    const T g = pg->value[static_cast<std::size_t>(bi) * C + c];
                    if (px->requires_grad) {
                        for (std::size_t i = 0; i < plane; ++i)
                            px->grad[base + i] += n.grad[base + i] * g;
                    }
                    if (pg->requires_grad) {
                        T acc = T(0);
                        for (std::size_t i = 0; i < plane; ++i)
                            acc += n.grad[base + i] * px->value[base + i];
                        pg->grad[static_cast<std::size_t>(bi) * C + c] += acc;
                    }
                }
            }
        },
        "mul_channel_gate");
}

// y[b,c,h,w] = x[b,c,h,w] * gate[b,0,h,w]; gate is (B, 1, H, W).
template <typename T>
Tensor<T> mul_spatial_gate(const Tensor<T>& x, const Tensor<T>& gate) {
    detail_ops::require_rank(x, 4, "mul_spatial_gate");
    detail_ops::require_rank(gate, 4, "mul_spatial_gate");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (gate.dim(0) != B || gate.dim(1) != 1 || gate.dim(2) != H || gate.dim(3) != W) {
        throw DimensionError("mul_spatial_gate: gate shape mismatch");
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(x.size());
    for (int bi = 0; bi < B; ++bi) {
        const T* gp = gate.values().data() + static_cast<std::size_t>(bi) * plane;
        for (int c = 0; c < C; ++c) {
            const T* src = x.values().data() + (static_cast<std::size_t>(bi) * C + c) * plane;
            T* dst = out.data() + (static_cast<std::size_t>(bi) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * gp[i];
        }
    }
    auto px = x.node(), pg = gate.node();
    return detail::make_op<T>(
        x.shape(), std::move(out), {px, pg},
        [px, pg, B, C, plane](Node<T>& n) {
            for (int bi = 0; bi < B; ++bi) {
                const T* gp = pg->value.data() + static_cast<std::size_t>(bi) * plane;
                for (int c = 0; c < C; ++c) {
                    const std::size_t base = (static_cast<std::size_t>(bi) * C + c) * plane;
                    if (px->requires_grad) {
                        for (std::size_t i = 0; i < plane; ++i)
                            px->grad[base + i] += n.grad[base + i] * gp[i];
                    }
                    if (pg->requires_grad) {
                        T* dg = pg->grad.data() + static_cast<std::size_t>(bi) * plane;
                        for (std::size_t i = 0; i < plane; ++i)
                            dg[i] += n.grad[base + i] * px->value[base + i];
                    }
                }
            }
        },
        "mul_spatial_gate");
}

namespace detail_ops {

// Shared bilinear kernel: factor = numer/denom with exactly one side 1.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int numer, int denom) {
    require_rank(x, 4, "bilinear_resize");
    if (numer < 1 || denom < 1 || (numer != 1 && denom != 1)) {
        throw InvalidArgument("bilinear_resize: factor must be r/1 or 1/r");
    }
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (denom > 1 && (H % denom != 0 || W % denom != 0)) {
        throw DimensionError("bilinear_resize: downsample factor does not divide dims");
    }
    const int Ho = denom > 1 ? H / denom : H * numer;
    const int Wo = denom > 1 ? W / denom : W * numer;
    const double s = static_cast<double>(denom) / static_cast<double>(numer);

    std::vector<amcn::detail::AxisSample> rows(static_cast<std::size_t>(Ho));
    std::vector<amcn::detail::AxisSample> cols(static_cast<std::size_t>(Wo));
    for (int r = 0; r < Ho; ++r) rows[static_cast<std::size_t>(r)] = amcn::detail::axis_sample(r, H, s);
    for (int c = 0; c < Wo; ++c) cols[static_cast<std::size_t>(c)] = amcn::detail::axis_sample(c, W, s);

    const std::size_t in_plane = static_cast<std::size_t>(H) * W;
    const std::size_t out_plane = static_cast<std::size_t>(Ho) * Wo;
    std::vector<T> out(static_cast<std::size_t>(B) * C * out_plane);
    for (int bc = 0; bc < B * C; ++bc) {
        const T* src = x.values().data() + static_cast<std::size_t>(bc) * in_plane;
        T* dst = out.data() + static_cast<std::size_t>(bc) * out_plane;
        for (int r = 0; r < Ho; ++r) {
            const auto& ry = rows[static_cast<std::size_t>(r)];
            for (int c = 0; c < Wo; ++c) {
                const auto& cx = cols[static_cast<std::size_t>(c)];
                const double acc =
                    (1.0 - ry.w1) * (1.0 - cx.w1) * src[static_cast<std::size_t>(ry.i0) * W + cx.i0] +
                    (1.0 - ry.w1) * cx.w1 * src[static_cast<std::size_t>(ry.i0) * W + cx.i1] +
                    ry.w1 * (1.0 - cx.w1) * src[static_cast<std::size_t>(ry.i1) * W + cx.i0] +
                    ry.w1 * cx.w1 * src[static_cast<std::size_t>(ry.i1) * W + cx.i1];
                dst[static_cast<std::size_t>(r) * Wo + c] = static_cast<T>(acc);
            }
        }
    }
    auto px = x.node();
    return amcn::nn::detail::make_op<T>(
        Shape{B, C, Ho, Wo}, std::move(out), {px},
        [px, B, C, W, Wo, Ho, in_plane, out_plane, rows, cols](Node<T>& n) {
            if (!px->requires_grad) return;
            for (int bc = 0; bc < B * C; ++bc) {
                T* dx = px->grad.data() + static_cast<std::size_t>(bc) * in_plane;
                const T* g = n.grad.data() + static_cast<std::size_t>(bc) * out_plane;
                for (int r = 0; r < Ho; ++r) {
                    const auto& ry = rows[static_cast<std::size_t>(r)];
                    for (int c = 0; c < Wo; ++c) {
                        const auto& cx = cols[static_cast<std::size_t>(c)];
                        const T gv = g[static_cast<std::size_t>(r) * Wo + c];
                        dx[static_cast<std::size_t>(ry.i0) * W + cx.i0] +=
                            static_cast<T>((1.0 - ry.w1) * (1.0 - cx.w1)) * gv;
                        dx[static_cast<std::size_t>(ry.i0) * W + cx.i1] +=
                            static_cast<T>((1.0 - ry.w1) * cx.w1) * gv;
                        dx[static_cast<std::size_t>(ry.i1) * W + cx.i0] +=
                            static_cast<T>(ry.w1 * (1.0 - cx.w1)) * gv;
                        dx[static_cast<std::size_t>(ry.i1) * W + cx.i1] +=
                            static_cast<T>(ry.w1 * cx.w1) * gv;
                    }
                }
            }
        },
        "bilinear_resize");
}

}  // namespace detail_ops

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, int factor) {
    if (factor < 1) throw InvalidArgument("bilinear_upsample: factor must be >= 1");
    return detail_ops::bilinear_resize(x, factor, 1);
}

template <typename T>
Tensor<T> bilinear_downsample(const Tensor<T>& x, int factor) {
    if (factor < 1) throw InvalidArgument("bilinear_downsample: factor must be >= 1");
    return detail_ops::bilinear_resize(x, 1, factor);
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    double acc = 0.0;
    for (const T& v : x.values()) acc += v;
    auto px = x.node();
    return detail::make_op<T>(
        Shape{1}, {static_cast<T>(acc)}, {px},
        [px](Node<T>& n) {
            if (!px->requires_grad) return;
            const T g = n.grad[0];
            for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
        },
        "sum_all");
}

// Dot product with a constant weight vector; used to make scalar losses
// with nondegenerate gradients in tests.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, std::vector<T> weights) {
    if (weights.size() != x.size()) throw DimensionError("weighted_sum: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) acc += double(weights[i]) * x.values()[i];
    auto px = x.node();
    auto w = std::make_shared<std::vector<T>>(std::move(weights));
    return detail::make_op<T>(
        Shape{1}, {static_cast<T>(acc)}, {px},
        [px, w](Node<T>& n) {
            if (!px->requires_grad) return;
            const T g = n.grad[0];
            for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g * (*w)[i];
        },
        "weighted_sum");
}

// y = a*x + b with constant scalar coefficients.
template <typename T>
Tensor<T> affine(const Tensor<T>& x, T a, T b) {
    std::vector<T> out(x.size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xv[i] + b;
    auto px = x.node();
    return detail::make_op<T>(
        x.shape(), std::move(out), {px},
        [px, a](Node<T>& n) {
            if (!px->requires_grad) return;
            for (std::size_t i = 0; i < n.grad.size(); ++i) px->grad[i] += n.grad[i] * a;
        },
        "affine");
}

// Per-channel affine with constant coefficients: y[b,c,:,:] = a[c]*x + b[c].
template <typename T>
Tensor<T> channel_affine(const Tensor<T>& x, std::vector<T> a, std::vector<T> b) {
    detail_ops::require_rank(x, 4, "channel_affine");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (a.size() != static_cast<std::size_t>(C) || b.size() != static_cast<std::size_t>(C)) {
        throw DimensionError("channel_affine: coefficient count mismatch");
    }
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<T> out(x.size());
    for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(bi) * C + c) * plane;
            const T ac = a[static_cast<std::size_t>(c)];
            const T bc = b[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < plane; ++i) out[base + i] = ac * x.values()[base + i] + bc;
        }
    }
    auto px = x.node();
    auto av = std::make_shared<std::vector<T>>(std::move(a));
    return detail::make_op<T>(
        x.shape(), std::move(out), {px},
        [px, av, B, C, plane](Node<T>& n) {
            if (!px->requires_grad) return;
            for (int bi = 0; bi < B; ++bi) {
                for (int c = 0; c < C; ++c) {
                    const std::size_t base = (static_cast<std::size_t>(bi) * C + c) * plane;
                    const T ac = (*av)[static_cast<std::size_t>(c)];
                    for (std::size_t i = 0; i < plane; ++i)
                        px->grad[base + i] += n.grad[base + i] * ac;
                }
            }
        },
        "channel_affine");
}

// ca*a + cb*b on scalars, with constant coefficients.
template <typename T>
Tensor<T> scaled_sum(const Tensor<T>& a, T ca, const Tensor<T>& b, T cb) {
    if (a.size() != 1 || b.size() != 1) throw InvalidArgument("scaled_sum: scalars required");
    auto pa = a.node(), pb = b.node();
    return detail::make_op<T>(
        Shape{1}, {ca * a.values()[0] + cb * b.values()[0]}, {pa, pb},
        [pa, pb, ca, cb](Node<T>& n) {
            if (pa->requires_grad) pa->grad[0] += n.grad[0] * ca;
            if (pb->requires_grad) pb->grad[0] += n.grad[0] * cb;
        },
        "scaled_sum");
}

}  // namespace amcn::nn
