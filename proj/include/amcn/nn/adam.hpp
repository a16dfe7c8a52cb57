#pragma once

#include <cmath>
#include <vector>

#include "amcn/error.hpp"
#include "amcn/nn/tensor.hpp"

namespace amcn::nn {

// Bias-corrected Adam. The learning-rate schedule is applied by the caller;
// each step takes the rate to use.
template <typename T>
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void register_parameters(const std::vector<Tensor<T>>& params) {
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            m_.emplace_back(p.size(), T(0));
            v_.emplace_back(p.size(), T(0));
        }
        step_ = 0;
    }

    // One update over all registered parameters using their current grads.
    void step(std::vector<Tensor<T>>& params, double lr) {
        if (params.size() != m_.size()) {
            throw InvalidArgument("adam: parameter set does not match registered state");
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            const std::vector<T>& g = params[pi].grad();
            std::vector<T>& theta = params[pi].values_mut();
            std::vector<T>& m = m_[pi];
            std::vector<T>& v = v_[pi];
            if (g.size() != m.size()) {
                throw DimensionError("adam: gradient size does not match moment state");
            }
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double gi = g[i];
                const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
                const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                const double m_hat = mi / bc1;
                const double v_hat = vi / bc2;
                theta[i] = static_cast<T>(theta[i] - lr * m_hat / (std::sqrt(v_hat) + eps_));
            }
        }
    }

    long step_count() const { return step_; }

private:
    double beta1_;
    double beta2_;
    double eps_;
    long step_ = 0;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
};

// lr(epoch) = lr0 * 2^(-floor(epoch / halving_period)), epochs 0-based.
inline double scheduled_learning_rate(double lr0, int halving_period, int epoch) {
    if (halving_period < 1) throw InvalidArgument("halving period must be positive");
    return lr0 * std::pow(2.0, -static_cast<double>(epoch / halving_period));
}

}  // namespace amcn::nn
