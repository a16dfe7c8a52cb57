#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "amcn/grid.hpp"
#include "amcn/nn/adam.hpp"
#include "amcn/nn/gradcheck.hpp"
#include "amcn/nn/ops.hpp"
#include "amcn/nn/tensor.hpp"
#include "amcn/rng.hpp"

using namespace amcn;
using nn::Tensor;

namespace {

Tensor<double> random_tensor(nn::Shape shape, Rng& rng, bool requires_grad, double lo = -1.0,
                             double hi = 1.0) {
    std::vector<double> v(nn::numel(shape));
    for (double& x : v) x = uniform(rng, lo, hi);
    return Tensor<double>::leaf(std::move(shape), std::move(v), requires_grad);
}

// Checks reverse-mode gradients of `build` against central differences for
// every grad-requiring input, using a fixed random projection as the loss.
double op_max_rel_err(std::vector<std::pair<std::string, Tensor<double>>> inputs,
                      const std::function<Tensor<double>()>& build) {
    Rng rng(991);
    std::vector<double> weights(build().size());
    for (double& w : weights) w = uniform(rng, -1.0, 1.0);
    auto closure = [&]() { return nn::weighted_sum(build(), weights); };
    nn::GradCheckOptions opt;
    auto report = nn::gradcheck(closure, inputs, opt);
    return report.max_rel_err;
}

}  // namespace

TEST_CASE("elementwise op values") {
    auto x = Tensor<double>::leaf({1, 2}, {0.0, 2.0});
    CHECK(nn::sigmoid(x).values()[0] == doctest::Approx(0.5));
    auto ones = Tensor<double>::full({1, 2}, 1.0);
    CHECK(nn::elementwise_mul(x, ones).values() == x.values());
    CHECK(nn::relu(Tensor<double>::leaf({1, 2}, {-3.0, 4.0})).values() ==
          std::vector<double>{0.0, 4.0});
    CHECK(nn::add(x, ones).values() == std::vector<double>{1.0, 3.0});
}

TEST_CASE("sigmoid gates keep attention maps bounded by their inputs") {
    Rng rng(4);
    auto x = random_tensor({2, 3, 4, 4}, rng, false, -5.0, 5.0);
    auto gate_in = random_tensor({2, 3, 4, 4}, rng, false, -5.0, 5.0);
    auto gated = nn::elementwise_mul(x, nn::sigmoid(gate_in));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = nn::sigmoid(gate_in).values()[i];
        CHECK(s > 0.0);
        CHECK(s < 1.0);
        CHECK(std::abs(gated.values()[i]) <= std::abs(x.values()[i]));
    }
}

TEST_CASE("concat then slice recovers the operands exactly") {
    Rng rng(8);
    auto a = random_tensor({2, 3, 3, 3}, rng, false);
    auto b = random_tensor({2, 7, 3, 3}, rng, false);
    auto cat = nn::concat_channels<double>({a, b});
    CHECK(cat.dim(1) == 10);
    CHECK(nn::slice_channels(cat, 0, 3).values() == a.values());
    CHECK(nn::slice_channels(cat, 3, 10).values() == b.values());
}

TEST_CASE("conv2d forward identities") {
    SUBCASE("1x1 identity kernel with zero bias reproduces the input") {
        Rng rng(5);
        auto x = random_tensor({1, 1, 3, 4}, rng, false);
        auto w = Tensor<double>::full({1, 1, 1, 1}, 1.0);
        auto b = Tensor<double>::zeros({1});
        CHECK(nn::conv2d(x, w, b, 0).values() == x.values());
    }
    SUBCASE("3x3 all-ones kernel sums the stencil") {
        auto x = Tensor<double>::full({1, 1, 5, 5}, 1.0);
        auto w = Tensor<double>::full({1, 1, 3, 3}, 1.0);
        auto b = Tensor<double>::zeros({1});
        auto y = nn::conv2d(x, w, b, 1);
        CHECK(y.values()[2 * 5 + 2] == doctest::Approx(9.0));  // interior
        CHECK(y.values()[0] == doctest::Approx(4.0));          // corner
    }
    SUBCASE("channel mismatch is rejected") {
        auto x = Tensor<double>::zeros({1, 2, 3, 3});
        auto w = Tensor<double>::zeros({1, 3, 3, 3});
        auto b = Tensor<double>::zeros({1});
        CHECK_THROWS_AS(nn::conv2d(x, w, b, 1), DimensionError);
    }
}

TEST_CASE("pooling and fully connected identities") {
    auto x = Tensor<double>::full({2, 3, 4, 4}, 2.5);
    auto pooled = nn::global_avg_pool(x);
    REQUIRE(pooled.shape() == nn::Shape{2, 3});
    for (double v : pooled.values()) CHECK(v == doctest::Approx(2.5));

    Rng rng(6);
    auto f = random_tensor({2, 3}, rng, false);
    std::vector<double> eye(9, 0.0);
    eye[0] = eye[4] = eye[8] = 1.0;
    auto w = Tensor<double>::leaf({3, 3}, eye);
    auto b = Tensor<double>::zeros({3});
    CHECK(nn::fully_connected(f, w, b).values() == f.values());

    SUBCASE("pool gradient distributes 1/(H*W) to every input element") {
        auto xi = random_tensor({1, 2, 4, 4}, rng, true);
        auto loss = nn::sum_all(nn::global_avg_pool(xi));
        loss.backward();
        for (double g : xi.grad()) CHECK(g == doctest::Approx(1.0 / 16.0));
    }
}

TEST_CASE("differentiable bilinear resize matches the raster resampler") {
    Rng rng(12);
    GeoGrid g = GeoGrid::create(12, 12, 0.0, 0.0, 1.0);
    std::vector<double> vals(144);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        vals[i] = uniform(rng, 0.0, 10.0);
        g.values[i] = static_cast<float>(vals[i]);
    }
    auto t = Tensor<double>::leaf({1, 1, 12, 12}, vals);
    GeoGrid down_grid = bilinear_resample(g, 1, 3);
    auto down_t = nn::bilinear_downsample(t, 3);
    REQUIRE(down_t.size() == down_grid.values.size());
    for (std::size_t i = 0; i < down_t.size(); ++i) {
        CHECK(down_t.values()[i] ==
              doctest::Approx(static_cast<double>(down_grid.values[i])).epsilon(1e-6));
    }

    SUBCASE("constant field stays constant and spreads a uniform gradient") {
        auto c = Tensor<double>::full({1, 1, 6, 6}, 3.25, true);
        auto up = nn::bilinear_upsample(c, 2);
        for (double v : up.values()) CHECK(v == doctest::Approx(3.25));
        nn::sum_all(up).backward();
        double total = 0.0;
        for (double gi : c.grad()) total += gi;
        CHECK(total == doctest::Approx(144.0));  // rows of the linear map sum to 1
        for (double gi : c.grad()) CHECK(gi > 0.0);
    }
}

TEST_CASE("reverse-mode gradients match central differences") {
    Rng rng(21);

    SUBCASE("conv2d at 1e-6") {
        auto x = random_tensor({2, 2, 5, 5}, rng, true);
        auto w = random_tensor({3, 2, 3, 3}, rng, true);
        auto b = random_tensor({3}, rng, true);
        auto err = op_max_rel_err({{"x", x}, {"w", w}, {"b", b}},
                                  [&]() { return nn::conv2d(x, w, b, 1); });
        CHECK(err <= 1e-6);
    }
    SUBCASE("bilinear resize at 1e-6") {
        auto x = random_tensor({1, 2, 8, 8}, rng, true);
        auto err =
            op_max_rel_err({{"x", x}}, [&]() { return nn::bilinear_downsample(x, 2); });
        CHECK(err <= 1e-6);
        auto x2 = random_tensor({1, 1, 4, 4}, rng, true);
        auto err2 =
            op_max_rel_err({{"x2", x2}}, [&]() { return nn::bilinear_upsample(x2, 3); });
        CHECK(err2 <= 1e-6);
    }
    SUBCASE("elementwise and gating ops at 1e-4") {
        auto a = random_tensor({2, 3, 4, 4}, rng, true);
        auto b = random_tensor({2, 3, 4, 4}, rng, true);
        CHECK(op_max_rel_err({{"a", a}, {"b", b}},
                             [&]() { return nn::elementwise_mul(nn::sigmoid(a), b); }) <= 1e-4);
        CHECK(op_max_rel_err({{"a", a}}, [&]() { return nn::relu(a); }) <= 1e-4);
        auto gate2 = random_tensor({2, 3}, rng, true);
        CHECK(op_max_rel_err({{"a", a}, {"g", gate2}},
                             [&]() { return nn::mul_channel_gate(a, nn::sigmoid(gate2)); }) <=
              1e-4);
        auto gate_s = random_tensor({2, 1, 4, 4}, rng, true);
        CHECK(op_max_rel_err({{"a", a}, {"g", gate_s}},
                             [&]() { return nn::mul_spatial_gate(a, nn::sigmoid(gate_s)); }) <=
              1e-4);
    }
    SUBCASE("fully connected pipeline at 1e-4") {
        auto x = random_tensor({3, 2, 4, 4}, rng, true);
        auto w = random_tensor({2, 2}, rng, true);
        auto b = random_tensor({2}, rng, true);
        auto err = op_max_rel_err({{"x", x}, {"w", w}, {"b", b}}, [&]() {
            return nn::fully_connected(nn::global_avg_pool(x), w, b);
        });
        CHECK(err <= 1e-4);
    }
    SUBCASE("concat and slice at 1e-6") {
        auto a = random_tensor({1, 2, 3, 3}, rng, true);
        auto b = random_tensor({1, 3, 3, 3}, rng, true);
        auto err = op_max_rel_err({{"a", a}, {"b", b}}, [&]() {
            return nn::slice_channels(nn::concat_channels<double>({a, b}), 1, 4);
        });
        CHECK(err <= 1e-6);
    }
}

TEST_CASE("linear model with quadratic loss gradchecks to near machine precision") {
    Rng rng(33);
    auto x = random_tensor({4, 3}, rng, false);
    auto w = random_tensor({2, 3}, rng, true);
    auto b = random_tensor({2}, rng, true);
    auto target = random_tensor({4, 2}, rng, false);
    auto closure = [&]() {
        auto pred = nn::fully_connected(x, w, b);
        auto diff = nn::sub(pred, target);
        return nn::sum_all(nn::elementwise_mul(diff, diff));
    };
    std::vector<std::pair<std::string, Tensor<double>>> params{{"w", w}, {"b", b}};
    auto report = nn::gradcheck(closure, params);
    CHECK(report.max_rel_err <= 1e-9);
}

TEST_CASE("gradcheck flags a corrupted backward pass") {
    Rng rng(44);
    auto x = random_tensor({1, 1, 4, 4}, rng, true);
    auto w = random_tensor({1, 1, 3, 3}, rng, true);
    auto b = random_tensor({1}, rng, true);
    // Identity forward whose backward scales gradients by 1.01.
    auto bad_identity = [](const Tensor<double>& t) {
        auto pt = t.node();
        std::vector<double> copy = t.values();
        return nn::detail::make_op<double>(
            t.shape(), std::move(copy), {pt},
            [pt](nn::Node<double>& n) {
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    pt->grad[i] += 1.01 * n.grad[i];
            },
            "bad_identity");
    };
    Rng wrng(55);
    std::vector<double> weights(16);
    for (double& v : weights) v = uniform(wrng, 0.5, 1.0);
    auto closure = [&]() {
        return nn::weighted_sum(bad_identity(nn::conv2d(x, w, b, 1)), weights);
    };
    std::vector<std::pair<std::string, Tensor<double>>> params{{"w", w}, {"b", b}};
    auto report = nn::gradcheck(closure, params);
    CHECK(report.max_rel_err > 1e-4);
    CHECK(report.n_failed > 0);
}

TEST_CASE("non-finite forward values trip a numeric error") {
    auto huge = Tensor<double>::full({1, 2}, 1e308);
    CHECK_THROWS_AS(nn::elementwise_mul(huge, huge), NumericError);
}

TEST_CASE("forward passes are deterministic") {
    Rng rng(66);
    auto x = random_tensor({2, 3, 6, 6}, rng, false);
    auto w = random_tensor({4, 3, 3, 3}, rng, false);
    auto b = random_tensor({4}, rng, false);
    auto y1 = nn::conv2d(x, w, b, 1);
    auto y2 = nn::conv2d(x, w, b, 1);
    CHECK(std::memcmp(y1.values().data(), y2.values().data(),
                      y1.size() * sizeof(double)) == 0);
}

TEST_CASE("adam steps") {
    SUBCASE("zero gradient leaves parameters unchanged and advances the counter") {
        auto theta = Tensor<float>::leaf({2}, {0.5f, -0.25f}, true);
        std::vector<Tensor<float>> params{theta};
        nn::Adam<float> adam;
        adam.register_parameters(params);
        auto loss = nn::weighted_sum(theta, std::vector<float>{0.0f, 0.0f});
        loss.backward();
        adam.step(params, 0.001);
        CHECK(theta.values()[0] == 0.5f);
        CHECK(theta.values()[1] == -0.25f);
        CHECK(adam.step_count() == 1);
    }
    SUBCASE("first step magnitude is lr * |g| / (|g| + eps)") {
        const double g0 = 0.37;
        auto theta = Tensor<double>::leaf({1}, {1.0}, true);
        std::vector<Tensor<double>> params{theta};
        nn::Adam<double> adam;
        adam.register_parameters(params);
        nn::weighted_sum(theta, std::vector<double>{g0}).backward();
        adam.step(params, 0.001);
        const double delta = 1.0 - theta.values()[0];
        const double expected = 0.001 * g0 / (g0 + 1e-8);
        CHECK(delta == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("learning rate halves on the schedule") {
        CHECK(nn::scheduled_learning_rate(0.001, 50, 0) == doctest::Approx(0.001));
        CHECK(nn::scheduled_learning_rate(0.001, 50, 49) == doctest::Approx(0.001));
        CHECK(nn::scheduled_learning_rate(0.001, 50, 50) == doctest::Approx(0.0005));
        CHECK(nn::scheduled_learning_rate(0.001, 50, 99) == doctest::Approx(0.0005));
        CHECK(nn::scheduled_learning_rate(0.001, 50, 100) == doctest::Approx(0.00025));
    }
}
