#pragma once

#include <cmath>

#include "amcn/nn/ops.hpp"
#include "amcn/nn/tensor.hpp"

namespace amcn::nn {

inline constexpr double kLossEpsilon = 0.001;

// Robust penalty: mean over batch items of sqrt(||target - pred||^2 + eps^2),
// with the Euclidean norm taken per item over all remaining dimensions.
// Smooth everywhere for eps > 0 and bounded below by eps.
template <typename T>
Tensor<T> charbonnier_loss(const Tensor<T>& pred, const Tensor<T>& target, double eps) {
    detail_ops::require_same(pred, target, "charbonnier_loss");
    if (!(eps > 0.0)) throw InvalidArgument("charbonnier_loss: eps must be positive");
    if (pred.shape().empty() || pred.dim(0) < 1) {
        throw DimensionError("charbonnier_loss: batch dimension required");
    }
    const int B = pred.dim(0);
    const std::size_t item = pred.size() / static_cast<std::size_t>(B);
    auto pp = pred.node();
    auto pt = target.node();
    auto roots = std::make_shared<std::vector<double>>(static_cast<std::size_t>(B));
    double acc = 0.0;
    for (int i = 0; i < B; ++i) {
        const T* p = pred.values().data() + static_cast<std::size_t>(i) * item;
        const T* t = target.values().data() + static_cast<std::size_t>(i) * item;
        double s = 0.0;
        for (std::size_t j = 0; j < item; ++j) {
            const double d = static_cast<double>(p[j]) - static_cast<double>(t[j]);
            s += d * d;
        }
        const double r = std::sqrt(s + eps * eps);
        (*roots)[static_cast<std::size_t>(i)] = r;
        acc += r;
    }
    const double value = acc / static_cast<double>(B);
    return detail::make_op<T>(
        Shape{1}, {static_cast<T>(value)}, {pp, pt},
        [pp, pt, roots, B, item](Node<T>& n) {
            const double g = static_cast<double>(n.grad[0]) / static_cast<double>(B);
            for (int i = 0; i < B; ++i) {
                const double gi = g / (*roots)[static_cast<std::size_t>(i)];
                const std::size_t base = static_cast<std::size_t>(i) * item;
                for (std::size_t j = 0; j < item; ++j) {
                    const double d = static_cast<double>(pp->value[base + j]) -
                                     static_cast<double>(pt->value[base + j]);
                    if (pp->requires_grad) pp->grad[base + j] += static_cast<T>(gi * d);
                    if (pt->requires_grad) pt->grad[base + j] -= static_cast<T>(gi * d);
                }
            }
        },
        "charbonnier_loss");
}

// Coarse-scale consistency penalty: the HR prediction is bilinearly
// downsampled by `factor` and compared against the input coarse field.
// Gradients flow through the downsampling into the prediction.
template <typename T>
Tensor<T> degradation_loss(const Tensor<T>& lr_precip, const Tensor<T>& hr_pred, double eps,
                           int factor) {
    Tensor<T> down = bilinear_downsample(hr_pred, factor);
    return charbonnier_loss(down, lr_precip, eps);
}

// Adaptively weighted combination of the fine- and coarse-scale losses.
// alpha and beta are complementary ratios of the current loss values and
// are treated as constants during backpropagation.
struct LossReport {
    double l_c = 0.0;
    double l_d = 0.0;
    double alpha = 1.0;
    double beta = 0.0;
    double l_total = 0.0;
};

template <typename T>
std::pair<Tensor<T>, LossReport> total_loss(const Tensor<T>& l_c, const Tensor<T>& l_d) {
    if (l_c.size() != 1 || l_d.size() != 1) {
        throw InvalidArgument("total_loss: scalar losses required");
    }
    const double c = l_c.values()[0];
    const double d = l_d.values()[0];
    if (!(c > 0.0) || !(d > 0.0)) {
        throw InvalidArgument("total_loss: losses must be positive");
    }
    LossReport rep;
    rep.l_c = c;
    rep.l_d = d;
    rep.alpha = c / (c + d);
    rep.beta = 1.0 - rep.alpha;  // complementary, so alpha + beta == 1 exactly
    Tensor<T> total = scaled_sum(l_c, static_cast<T>(rep.alpha), l_d, static_cast<T>(rep.beta));
    rep.l_total = total.values()[0];
    return {total, rep};
}

}  // namespace amcn::nn
