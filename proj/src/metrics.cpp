#include "amcn/metrics.hpp"

#include <cmath>
#include <limits>

#include "amcn/error.hpp"

namespace amcn {

Metrics metrics_from_pairs(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) {
        throw DimensionError("metrics: sample sizes differ");
    }
    const std::size_t n = pred.size();
    if (n < 2) throw InvalidArgument("metrics: need at least 2 samples");

    double sp = 0.0, st = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sp += pred[i];
        st += truth[i];
    }
    const double mp = sp / static_cast<double>(n);
    const double mt = st / static_cast<double>(n);

    double spp = 0.0, stt = 0.0, spt = 0.0, se = 0.0, se2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dp = pred[i] - mp;
        const double dt = truth[i] - mt;
        spp += dp * dp;
        stt += dt * dt;
        spt += dp * dt;
        const double e = pred[i] - truth[i];
        se += e;
        se2 += e * e;
    }

    Metrics m;
    m.n = n;
    m.bias = se / static_cast<double>(n);
    m.rmse = std::sqrt(se2 / static_cast<double>(n));
    if (spp > 0.0 && stt > 0.0) {
        const double r = spt / std::sqrt(spp * stt);
        m.r2 = r * r;
        m.r2_defined = true;
    } else {
        m.r2 = std::numeric_limits<double>::quiet_NaN();
        m.r2_defined = false;
    }
    return m;
}

Metrics evaluate_image(const GeoGrid& pred, const GeoGrid& truth) {
    pred.validate();
    truth.validate();
    if (!pred.same_geometry(truth)) {
        throw DimensionError("metrics: grids are not co-registered");
    }
    std::vector<double> p, t;
    p.reserve(pred.values.size());
    t.reserve(pred.values.size());
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        if (pred.values[i] == pred.nodata || truth.values[i] == truth.nodata) continue;
        p.push_back(pred.values[i]);
        t.push_back(truth.values[i]);
    }
    if (p.size() < 2) throw InvalidArgument("metrics: fewer than 2 mutually valid pixels");
    return metrics_from_pairs(p, t);
}

Metrics evaluate_stations(const GeoGrid& pred, const StationSet& stations) {
    auto sampled = sample_at_stations(pred, stations);
    std::vector<double> p, t;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const auto& v = sampled[i].second;
        const auto& obs = stations.records[i].value;
        if (!v.has_value() || !obs.has_value()) continue;
        p.push_back(*v);
        t.push_back(*obs);
    }
    if (p.size() < 2) throw InvalidArgument("metrics: fewer than 2 usable stations");
    return metrics_from_pairs(p, t);
}

}  // namespace amcn
