#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "metassl/hetloss.hpp"
#include "metassl/model.hpp"
#include "support/oracles.hpp"

using namespace metassl;

namespace {
Image random_image(std::mt19937_64& rng, int H, int W, int IC) {
    Image img(H, W, IC);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : img.data) v = u(rng);
    return img;
}
}  // namespace

TEST_CASE("init_net is deterministic and respects the Glorot bounds") {
    const TinySegNet a = init_net(42, 1, 8, 3);
    const TinySegNet b = init_net(42, 1, 8, 3);
    const TinySegNet c = init_net(43, 1, 8, 3);
    CHECK(a.conv1_w == b.conv1_w);
    CHECK(a.conv2_w == b.conv2_w);
    CHECK(a.conv1_w != c.conv1_w);

    for (float v : a.conv1_b) CHECK(v == 0.0f);
    for (float v : a.conv2_b) CHECK(v == 0.0f);
    const float a1 = std::sqrt(6.0f / (1 * 9 + 8 * 9));
    for (float v : a.conv1_w) CHECK(std::fabs(v) <= a1);
    const float a2 = std::sqrt(6.0f / (8 + 3));
    for (float v : a.conv2_w) CHECK(std::fabs(v) <= a2);
    CHECK(a.param_count() == 8 * 9 + 8 + 3 * 8 + 3);
}

TEST_CASE("init_net rejects degenerate architectures") {
    CHECK_THROWS_AS(init_net(1, 0, 8, 3), std::invalid_argument);
    CHECK_THROWS_AS(init_net(1, 1, 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(init_net(1, 1, 8, 1), std::invalid_argument);
}

TEST_CASE("forward matches the double-precision oracle") {
    std::mt19937_64 rng(71);
    const TinySegNet net = init_net(5, 2, 6, 3);
    const Image img = random_image(rng, 7, 5, 2);

    const LogitMap z = forward_logits(net, img);
    const std::vector<double> zd =
        oracle::double_forward(oracle::flatten_params(net), img, 6, 3, {});
    REQUIRE(z.data.size() == zd.size());
    for (size_t i = 0; i < zd.size(); ++i)
        CHECK(static_cast<double>(z.data[i]) == doctest::Approx(zd[i]).epsilon(1e-5));
}

TEST_CASE("forward_logits equals the cached forward pass") {
    std::mt19937_64 rng(73);
    const TinySegNet net = init_net(7, 1, 4, 2);
    const Image img = random_image(rng, 6, 6, 1);
    const auto [z, cache] = forward(net, img);
    CHECK(forward_logits(net, img).data == z.data);
}

TEST_CASE("interior logits are translation equivariant (zero padding only at the rim)") {
    std::mt19937_64 rng(79);
    const TinySegNet net = init_net(11, 1, 4, 2);
    Image img = random_image(rng, 8, 8, 1);
    Image shifted(8, 8, 1);
    for (int r = 0; r + 1 < 8; ++r)
        for (int c = 0; c < 8; ++c) shifted.at(r + 1, c, 0) = img.at(r, c, 0);

    const LogitMap z = forward_logits(net, img);
    const LogitMap zs = forward_logits(net, shifted);
    for (int r = 2; r < 6; ++r)
        for (int c = 2; c < 6; ++c)
            for (int k = 0; k < 2; ++k)
                CHECK(zs.at(r + 1, c, k) == doctest::Approx(z.at(r, c, k)).epsilon(1e-6));
}

TEST_CASE("forward rejects a channel mismatch") {
    const TinySegNet net = init_net(1, 2, 4, 2);
    CHECK_THROWS_AS(forward_logits(net, Image(4, 4, 1)), std::invalid_argument);
}

TEST_CASE("dropout is deterministic, unbiased in expectation, and disabled at rate 0") {
    std::mt19937_64 rng(83);
    const TinySegNet net = init_net(13, 1, 8, 2);
    const Image img = random_image(rng, 12, 12, 1);

    const auto [z1, c1] = forward(net, img, DropoutSpec{0.5f, 99});
    const auto [z2, c2] = forward(net, img, DropoutSpec{0.5f, 99});
    const auto [z3, c3] = forward(net, img, DropoutSpec{0.5f, 100});
    CHECK(z1.data == z2.data);
    CHECK(c1.drop_mask == c2.drop_mask);
    CHECK(z1.data != z3.data);

    double mean = 0.0;
    for (float m : c1.drop_mask) {
        CHECK((m == 0.0f || m == doctest::Approx(2.0f)));
        mean += m;
    }
    mean /= static_cast<double>(c1.drop_mask.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));

    const auto [z0, c0] = forward(net, img, DropoutSpec{0.0f, 99});
    CHECK(c0.drop_mask.empty());
    CHECK(z0.data == forward_logits(net, img).data);

    CHECK_THROWS_AS(forward(net, img, DropoutSpec{1.0f, 0}), std::invalid_argument);
}

TEST_CASE("backward passes finite differences through a cross-entropy head") {
    std::mt19937_64 rng(89);
    const TinySegNet net = init_net(17, 1, 4, 2);
    const Image img = random_image(rng, 5, 5, 1);
    const LabelMap y = oracle::random_labelmap(rng, 5, 5, 2);
    const RegionMap m = oracle::random_regionmap(rng, 5, 5);
    const WeightSchedule s =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.3, Ordering::Unlabeled);

    const auto [z, cache] = forward(net, img);
    const LossOutput ce = het_ce(softmax(z), y, m, s);
    const NetGradients g = backward(net, cache, ce.grad);

    double Z = 0.0;
    for (size_t px = 0; px < z.pixels(); ++px) Z += s.w[static_cast<size_t>(m.data[px])];
    std::vector<double> params = oracle::flatten_params(net);
    auto value = [&]() {
        const std::vector<double> zd = oracle::double_forward(params, img, 4, 2, {});
        const std::vector<double> p = oracle::double_softmax(zd, 5, 5, 2);
        double sum = 0.0;
        for (size_t px = 0; px < z.pixels(); ++px) {
            const double wx = s.w[static_cast<size_t>(m.data[px])];
            sum += wx * std::log(std::max(p[px * 2 + y.data[px]], 1e-12));
        }
        return -sum / Z;
    };
    CHECK(value() == doctest::Approx(ce.value).epsilon(1e-5));
    CHECK(oracle::check_gradient_d(params, oracle::flatten_grads(g), value, 1e-5) < 1e-4);
}

TEST_CASE("backward passes finite differences with an active dropout mask") {
    std::mt19937_64 rng(97);
    const TinySegNet net = init_net(19, 1, 4, 2);
    const Image img = random_image(rng, 4, 4, 1);
    const LabelMap y = oracle::random_labelmap(rng, 4, 4, 2);
    const RegionMap m(4, 4, Region::UC);
    const WeightSchedule s = uniform_schedule(Ordering::Unlabeled);

    const auto [z, cache] = forward(net, img, DropoutSpec{0.3f, 7});
    const LossOutput ce = het_ce(softmax(z), y, m, s);
    const NetGradients g = backward(net, cache, ce.grad);

    std::vector<double> params = oracle::flatten_params(net);
    auto value = [&]() {
        const std::vector<double> zd =
            oracle::double_forward(params, img, 4, 2, cache.drop_mask);
        const std::vector<double> p = oracle::double_softmax(zd, 4, 4, 2);
        double sum = 0.0;
        for (size_t px = 0; px < z.pixels(); ++px)
            sum += std::log(std::max(p[px * 2 + y.data[px]], 1e-12));
        return -sum / 16.0;
    };
    CHECK(oracle::check_gradient_d(params, oracle::flatten_grads(g), value, 1e-5) < 1e-4);
}

TEST_CASE("conv2 bias gradient is the per-class sum of the upstream gradient") {
    std::mt19937_64 rng(101);
    const TinySegNet net = init_net(23, 1, 4, 3);
    const Image img = random_image(rng, 4, 4, 1);
    const auto [z, cache] = forward(net, img);

    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> d_logits(z.data.size());
    for (float& v : d_logits) v = u(rng);

    const NetGradients g = backward(net, cache, d_logits);
    for (int k = 0; k < 3; ++k) {
        double expect = 0.0;
        for (size_t px = 0; px < z.pixels(); ++px) expect += d_logits[px * 3 + k];
        CHECK(g.conv2_b[k] == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("backward rejects a stale cache and bad gradient sizes") {
    std::mt19937_64 rng(103);
    TinySegNet net = init_net(29, 1, 4, 2);
    const Image img = random_image(rng, 4, 4, 1);
    auto [z, cache] = forward(net, img);

    CHECK_THROWS_AS(backward(net, cache, std::vector<float>(3, 0.0f)), std::invalid_argument);
    net.conv1_w[0] += 1.0f;
    CHECK_THROWS_AS(backward(net, cache, std::vector<float>(z.data.size(), 0.0f)),
                    std::invalid_argument);
}

TEST_CASE("accumulate and scale behave linearly") {
    const TinySegNet net = init_net(31, 1, 2, 2);
    NetGradients a = zero_gradients(net);
    NetGradients b = zero_gradients(net);
    a.conv2_b = {1.0f, 2.0f};
    b.conv2_b = {0.5f, -1.0f};
    accumulate(a, b);
    CHECK(a.conv2_b[0] == doctest::Approx(1.5));
    CHECK(a.conv2_b[1] == doctest::Approx(1.0));
    scale(a, 2.0f);
    CHECK(a.conv2_b[0] == doctest::Approx(3.0));
    CHECK(a.conv1_w[0] == 0.0f);
}

TEST_CASE("sgd_step applies theta -= lr * g and rejects non-finite gradients") {
    TinySegNet net = init_net(37, 1, 2, 2);
    const float before = net.conv2_b[0];
    NetGradients g = zero_gradients(net);
    g.conv2_b[0] = 2.0f;
    sgd_step(net, g, 0.1f);
    CHECK(net.conv2_b[0] == doctest::Approx(before - 0.2f));

    g.conv2_b[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(sgd_step(net, g, 0.1f), std::runtime_error);
    CHECK_THROWS_AS(sgd_step(net, zero_gradients(net), 0.0f), std::invalid_argument);
}

TEST_CASE("ema_update endpoints and hand blend") {
    const TinySegNet student = init_net(41, 1, 2, 2);
    TinySegNet teacher = init_net(43, 1, 2, 2);
    const TinySegNet frozen = teacher;

    ema_update(teacher, student, 1.0);
    CHECK(teacher.conv1_w == frozen.conv1_w);

    ema_update(teacher, student, 0.0);
    CHECK(teacher.conv1_w == student.conv1_w);

    teacher = frozen;
    ema_update(teacher, student, 0.9);
    for (size_t i = 0; i < teacher.conv1_w.size(); ++i)
        CHECK(teacher.conv1_w[i] ==
              doctest::Approx(0.9f * frozen.conv1_w[i] + 0.1f * student.conv1_w[i])
                  .epsilon(1e-6));

    CHECK_THROWS_AS(ema_update(teacher, student, 1.5), std::invalid_argument);
    TinySegNet other = init_net(47, 1, 3, 2);
    CHECK_THROWS_AS(ema_update(other, student, 0.5), std::invalid_argument);
}

TEST_CASE("poly_lr decays monotonically from lr0 to the floor") {
    CHECK(poly_lr(0.01, 0, 600) == doctest::Approx(0.01));
    CHECK(poly_lr(0.01, 300, 600) == doctest::Approx(0.01 * std::pow(0.5, 0.9)).epsilon(1e-12));
    CHECK(poly_lr(0.01, 600, 600) == doctest::Approx(0.01 * 1e-3));
    CHECK(poly_lr(0.01, 700, 600) == doctest::Approx(0.01 * 1e-3));
    double prev = 1.0;
    for (int t = 0; t <= 600; ++t) {
        const double lr = poly_lr(0.01, t, 600);
        CHECK(lr > 0.0);
        CHECK(lr <= prev);
        prev = lr;
    }
}

TEST_CASE("checkpoint round trip is bitwise exact") {
    const TinySegNet net = init_net(53, 2, 6, 4);
    const std::string path = "test_model_ckpt.tsnw";
    save_checkpoint(net, path);
    const TinySegNet back = load_checkpoint(path);
    CHECK(back.in_channels == 2);
    CHECK(back.hidden_width == 6);
    CHECK(back.num_classes == 4);
    CHECK(back.conv1_w == net.conv1_w);
    CHECK(back.conv1_b == net.conv1_b);
    CHECK(back.conv2_w == net.conv2_w);
    CHECK(back.conv2_b == net.conv2_b);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects bad files") {
    CHECK_THROWS_AS(load_checkpoint("does_not_exist.tsnw"), std::runtime_error);

    const std::string bad = "test_model_bad.tsnw";
    {
        std::ofstream f(bad, std::ios::binary);
        f.write("JUNK", 4);
    }
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
    {
        std::ofstream f(bad, std::ios::binary);
        f.write("TSNW", 4);
        const uint32_t dims[3] = {1, 4, 2};
        f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        const float one = 1.0f;  // far too short a payload
        f.write(reinterpret_cast<const char*>(&one), sizeof(one));
    }
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
    std::remove(bad.c_str());
}
