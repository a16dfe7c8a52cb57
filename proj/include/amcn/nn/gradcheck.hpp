#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "amcn/error.hpp"
#include "amcn/nn/tensor.hpp"
#include "amcn/rng.hpp"

namespace amcn::nn {

struct GradCheckOptions {
    double h = 1e-5;
    double tolerance = 1e-4;
    // Above this many total elements a stratified random subsample of
    // `subsample` elements is checked instead of every element.
    std::size_t exhaustive_limit = 10000;
    std::size_t subsample = 2000;
    std::uint64_t seed = 7;
    // Relative error denominators are floored to keep elements whose true
    // gradient sits at the finite-difference noise floor from dominating.
    double denom_floor = 1e-6;
};

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t n_checked = 0;
    std::size_t n_failed = 0;
    GradCheckEntry worst;

    bool passed(double tolerance) const { return max_rel_err <= tolerance; }
};

// Central-difference check of reverse-mode gradients for a scalar loss.
// `closure` must rebuild the loss from the current parameter values on
// every call and be deterministic; a bitwise mismatch between two
// evaluations aborts the check.
inline GradCheckReport gradcheck(const std::function<Tensor<double>()>& closure,
                                 std::vector<std::pair<std::string, Tensor<double>>>& params,
                                 const GradCheckOptions& opt = {}) {
    const double v1 = closure().item();
    const double v2 = closure().item();
    if (std::memcmp(&v1, &v2, sizeof(double)) != 0) {
        throw NumericError("gradcheck: closure is not deterministic");
    }

    Tensor<double> loss = closure();
    loss.backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    std::size_t total = 0;
    for (auto& [name, t] : params) {
        analytic.push_back(t.grad());
        total += t.size();
    }

    // (param index, element index) pairs to probe.
    std::vector<std::pair<std::size_t, std::size_t>> picks;
    if (total <= opt.exhaustive_limit) {
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            for (std::size_t i = 0; i < params[pi].second.size(); ++i) picks.emplace_back(pi, i);
        }
    } else {
        Rng rng(opt.seed);
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            const std::size_t sz = params[pi].second.size();
            std::size_t quota = (opt.subsample * sz + total - 1) / total;
            quota = std::max<std::size_t>(quota, 1);
            quota = std::min(quota, sz);
            for (std::size_t q = 0; q < quota; ++q) {
                picks.emplace_back(pi, static_cast<std::size_t>(below(rng, sz)));
            }
        }
    }

    GradCheckReport report;
    for (const auto& [pi, i] : picks) {
        std::vector<double>& theta = params[pi].second.values_mut();
        const double saved = theta[i];
        theta[i] = saved + opt.h;
        const double lp = closure().item();
        theta[i] = saved - opt.h;
        const double lm = closure().item();
        theta[i] = saved;
        const double numeric = (lp - lm) / (2.0 * opt.h);
        const double a = analytic[pi][i];
        const double denom = std::max({std::abs(a), std::abs(numeric), opt.denom_floor});
        const double rel = std::abs(a - numeric) / denom;
        ++report.n_checked;
        if (rel > opt.tolerance) ++report.n_failed;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst = {params[pi].first, i, a, numeric, rel};
        }
    }
    return report;
}

}  // namespace amcn::nn
