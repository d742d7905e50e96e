#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "basecast/losses.hpp"
#include "basecast/model.hpp"

using namespace basecast;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> data(static_cast<size_t>(shape_size(shape)));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(data));
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.channels = 2;
    cfg.input_len = 6;
    cfg.output_len = 4;
    cfg.num_bases = 3;
    cfg.heads = 2;
    cfg.bcab_layers = 1;
    cfg.coef_dim = 3;
    cfg.bottleneck = 2;
    cfg.basis_hidden = 4;
    return cfg;
}

// identity-wired bottleneck MLP: square layers, unit diagonals, zero biases
BottleneckMlp identity_mlp(int width) {
    std::vector<double> eye(static_cast<size_t>(width) * width, 0.0);
    for (int i = 0; i < width; ++i) eye[static_cast<size_t>(i) * width + i] = 1.0;
    BottleneckMlp m;
    m.w1 = Tensor::leaf({width, width}, eye);
    m.b1 = Tensor::leaf({width}, std::vector<double>(width, 0.0));
    m.w2 = Tensor::leaf({width, width}, eye);
    m.b2 = Tensor::leaf({width}, std::vector<double>(width, 0.0));
    m.w3 = Tensor::leaf({width, width}, eye);
    m.b3 = Tensor::leaf({width}, std::vector<double>(width, 0.0));
    m.w4 = Tensor::leaf({width, width}, eye);
    m.b4 = Tensor::leaf({width}, std::vector<double>(width, 0.0));
    return m;
}

} // namespace

TEST_CASE("project_future_basis with zero weights emits the output bias") {
    ModelConfig cfg = tiny_config();
    Rng rng(3);
    ForecastNet net(cfg, rng);
    auto params = net.parameters();
    for (auto& p : params) {
        auto& v = p.tensor.mutable_values();
        if (p.name.find("proj") != std::string::npos && p.name.back() == 'w')
            std::fill(v.begin(), v.end(), 0.0);
    }
    const std::vector<double>* b4 = nullptr;
    for (auto& p : params)
        if (p.name == "forecast.proj.l4.b") b4 = &p.tensor.values();
    REQUIRE(b4 != nullptr);

    Rng drng(5);
    Tensor zy = random_tensor({cfg.num_bases, cfg.output_len}, drng);
    Tensor zhat = net.project_future_basis(zy);
    REQUIRE(zhat.shape() == Shape{cfg.num_bases, cfg.output_len});
    for (int i = 0; i < cfg.num_bases; ++i)
        for (int j = 0; j < cfg.output_len; ++j)
            CHECK(zhat.at(i, j) == doctest::Approx((*b4)[j]).epsilon(1e-14));
}

TEST_CASE("project_future_basis matches a hand bottleneck forward") {
    ModelConfig cfg = tiny_config();
    cfg.num_bases = 1;
    cfg.output_len = 2;
    cfg.bottleneck = 2;
    Rng rng(11);
    ForecastNet net(cfg, rng);
    auto params = net.parameters();
    auto get = [&](const std::string& name) -> const std::vector<double>& {
        for (auto& p : params)
            if (p.name == name) return p.tensor.values();
        throw std::runtime_error("missing " + name);
    };
    Tensor zy = Tensor::from_data({1, 2}, {0.3, -0.8});
    Tensor out = net.project_future_basis(zy);

    auto relu_v = [](double v) { return v > 0 ? v : 0.0; };
    auto mlp_layer = [&](const std::vector<double>& x, const std::vector<double>& w,
                         const std::vector<double>& b, int in, int outn, bool act) {
        std::vector<double> y(outn);
        for (int j = 0; j < outn; ++j) {
            double acc = b[j];
            for (int i = 0; i < in; ++i) acc += x[i] * w[i * outn + j];
            y[j] = act ? relu_v(acc) : acc;
        }
        return y;
    };
    auto h = mlp_layer({0.3, -0.8}, get("forecast.proj.l1.w"), get("forecast.proj.l1.b"), 2, 2, true);
    h = mlp_layer(h, get("forecast.proj.l2.w"), get("forecast.proj.l2.b"), 2, 2, true);
    h = mlp_layer(h, get("forecast.proj.l3.w"), get("forecast.proj.l3.b"), 2, 2, true);
    h = mlp_layer(h, get("forecast.proj.l4.w"), get("forecast.proj.l4.b"), 2, 2, false);
    CHECK(out.values()[0] == doctest::Approx(h[0]).epsilon(1e-13));
    CHECK(out.values()[1] == doctest::Approx(h[1]).epsilon(1e-13));
}

TEST_CASE("split_heads chunks contiguously and round-trips") {
    Tensor z = Tensor::from_data({1, 4}, {1, 2, 3, 4});
    Tensor split = ForecastNet::split_heads(z, 2);
    REQUIRE(split.shape() == Shape{1, 2, 2});
    CHECK(split.values() == std::vector<double>{1, 2, 3, 4});

    // merge(split(x)) == x
    Tensor merged = reshape(split, {1, 4});
    CHECK(merged.values() == z.values());

    Rng rng(2);
    Tensor big = random_tensor({3, 96}, rng);
    Tensor s16 = ForecastNet::split_heads(big, 16);
    CHECK(s16.shape() == Shape{3, 16, 6});

    CHECK_THROWS_AS(ForecastNet::split_heads(z, 3), ShapeError);
}

TEST_CASE("aggregate matches the triple loop exactly") {
    Rng rng(21);
    for (auto [channels, n, heads, horizon] :
         {std::tuple{2, 3, 2, 2}, {4, 5, 4, 3}, {1, 1, 1, 1}, {3, 2, 4, 2}}) {
        Tensor c = random_tensor({channels, n, heads}, rng);
        Tensor z = random_tensor({n, heads, horizon}, rng);
        Tensor out = ForecastNet::aggregate(c, z);
        REQUIRE(out.shape() == Shape{channels, heads, horizon});
        for (int i = 0; i < channels; ++i)
            for (int h = 0; h < heads; ++h)
                for (int t = 0; t < horizon; ++t) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j)
                        acc += c.values()[(i * n + j) * heads + h] *
                               z.values()[(j * heads + h) * horizon + t];
                    CHECK(out.values()[(i * heads + h) * horizon + t] == acc); // exact
                }
    }
}

TEST_CASE("aggregate trivial cases and linearity") {
    // N=1, c == 1: every channel copies the single basis row
    Tensor c1 = Tensor::ones({3, 1, 2});
    Rng rng(4);
    Tensor z1 = random_tensor({1, 2, 5}, rng);
    Tensor out = ForecastNet::aggregate(c1, z1);
    for (int i = 0; i < 3; ++i)
        for (int h = 0; h < 2; ++h)
            for (int t = 0; t < 5; ++t)
                CHECK(out.values()[(i * 2 + h) * 5 + t] == z1.values()[h * 5 + t]);

    // c == 0 gives zeros
    Tensor c0 = Tensor::zeros({3, 4, 2});
    Tensor z = random_tensor({4, 2, 5}, rng);
    Tensor zero_out = ForecastNet::aggregate(c0, z);
    for (double v : zero_out.values()) CHECK(v == 0.0);

    // exact homogeneity in c
    Tensor c = random_tensor({2, 3, 2}, rng);
    Tensor zz = random_tensor({3, 2, 4}, rng);
    Tensor lhs = ForecastNet::aggregate(Tensor::from_data(c.shape(), [&] {
                                            auto v = c.values();
                                            for (auto& e : v) e *= 2.0;
                                            return v;
                                        }()),
                                        zz);
    Tensor rhs = ForecastNet::aggregate(c, zz);
    for (size_t i = 0; i < lhs.values().size(); ++i)
        CHECK(lhs.values()[i] == 2.0 * rhs.values()[i]);
}

TEST_CASE("identity fusion returns the concatenated heads") {
    BottleneckMlp fuse = identity_mlp(4);
    Rng rng(8);
    Tensor y_tilde = random_tensor({3, 2, 2}, rng);
    Tensor flat = reshape(y_tilde, {3, 4});
    Tensor fused = fuse.apply(flat, Activation::Linear);
    for (size_t i = 0; i < fused.values().size(); ++i)
        CHECK(fused.values()[i] == doctest::Approx(flat.values()[i]).epsilon(1e-14));
}

TEST_CASE("model forecast composes the module pipeline") {
    ModelConfig cfg = tiny_config();
    Model model(cfg);
    Rng rng(33);
    Tensor x = random_tensor({cfg.channels, cfg.input_len}, rng);
    const double tau = 0.42;

    Tensor direct = model.forecast(x, tau);
    REQUIRE(direct.shape() == Shape{cfg.channels, cfg.output_len});

    // deterministic
    Tensor again = model.forecast(x, tau);
    CHECK(direct.values() == again.values());

    // compose from the parts
    Tensor z = model.basis_source().generate(tau);
    auto [zx, zy] = split_basis(z, cfg.input_len);
    Rng rng2(cfg.seed);
    // rebuild coef/forecast nets is not possible without the model's rng;
    // instead check against training_forward's prediction on the same window
    Tensor y = random_tensor({cfg.channels, cfg.output_len}, rng);
    auto outs = model.training_forward(x, y, tau);
    for (size_t i = 0; i < direct.values().size(); ++i)
        CHECK(direct.values()[i] == doctest::Approx(outs.pred.values()[i]).epsilon(1e-9));
    CHECK(outs.basis.shape() == Shape{cfg.num_bases, cfg.input_len + cfg.output_len});
    (void)zx;
    (void)zy;
}

TEST_CASE("model rejects invalid configs at construction") {
    ModelConfig cfg = tiny_config();
    cfg.heads = 3; // does not divide output_len = 4
    CHECK_THROWS_AS((void)Model{cfg}, ConfigError);
}

TEST_CASE("prediction loss reaches every parameter group") {
    ModelConfig cfg = tiny_config();
    cfg.activation = Activation::Gelu;
    Model model(cfg);
    Rng rng(55);
    Tensor x = random_tensor({cfg.channels, cfg.input_len}, rng);
    Tensor y = random_tensor({cfg.channels, cfg.output_len}, rng);

    auto& params = model.parameters();
    auto f = [&]() { return mse_loss(model.forecast(x, 0.3), y); };
    auto report = grad_check(f, params, 1e-4);
    CHECK(report.max_rel_err < 1e-4);

    // every group nonzero for generic inputs: check one tensor per group
    for (auto& p : params) p.tensor.zero_grad();
    f().backward();
    auto group_nonzero = [&](const std::string& prefix) {
        double acc = 0.0;
        for (auto& p : params)
            if (p.name.rfind(prefix, 0) == 0)
                for (double g : p.tensor.grad()) acc += std::abs(g);
        return acc > 0.0;
    };
    CHECK(group_nonzero("basis."));
    CHECK(group_nonzero("coef."));
    CHECK(group_nonzero("forecast."));
}
