#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "metassl/hetloss.hpp"
#include "support/oracles.hpp"

using namespace metassl;

namespace {
WeightSchedule custom_schedule(double uc, double us, double dc, double ds) {
    WeightSchedule s;
    s.delta = 0.5;
    s.w = {uc, us, dc, ds};
    return s;
}

const WeightSchedule kUniform = uniform_schedule(Ordering::Unlabeled);
}  // namespace

TEST_CASE("het_ce single uniform pixel is ln 2") {
    ProbMap p(1, 1, 2, 0.5f);
    LabelMap y(1, 1, 0);
    RegionMap m(1, 1, Region::US);
    const LossOutput out = het_ce(p, y, m, kUniform);
    CHECK(out.value == doctest::Approx(std::log(2.0)).epsilon(1e-7));
}

TEST_CASE("het_ce two-pixel weighted hand value") {
    ProbMap p(1, 2, 2);
    p.at(0, 0, 0) = 0.9f;
    p.at(0, 0, 1) = 0.1f;
    p.at(0, 1, 0) = 0.4f;
    p.at(0, 1, 1) = 0.6f;
    LabelMap y(1, 2, 0);
    RegionMap m(1, 2, Region::UC);
    m.at(0, 1) = Region::DS;
    const WeightSchedule s = custom_schedule(1.0, 0.8, 0.6, 0.5);
    const LossOutput out = het_ce(p, y, m, s);
    // -(1*ln 0.9 + 0.5*ln 0.4) / 1.5
    CHECK(out.value == doctest::Approx(0.37567059).epsilon(1e-6));
}

TEST_CASE("het_ce gradient hand value") {
    ProbMap p(1, 1, 2);
    p.at(0, 0, 0) = 0.7f;
    p.at(0, 0, 1) = 0.3f;
    LabelMap y(1, 1, 0);
    RegionMap m(1, 1, Region::UC);
    const LossOutput out = het_ce(p, y, m, kUniform);
    CHECK(out.grad[0] == doctest::Approx(-0.3).epsilon(1e-6));
    CHECK(out.grad[1] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("het_ce value matches the naive oracle on random inputs") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const ProbMap p = oracle::random_probmap(rng, 5, 7, 3);
        const LabelMap y = oracle::random_labelmap(rng, 5, 7, 3);
        const RegionMap m = oracle::random_regionmap(rng, 5, 7);
        for (const WeightSchedule& s :
             {make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.3, Ordering::Unlabeled),
              make_schedule({DecayKind::Reciprocal, 0}, 0.6, Ordering::Labeled), kUniform}) {
            const LossOutput out = het_ce(p, y, m, s);
            CHECK(out.value == doctest::Approx(oracle::naive_het_ce(p, y, m, s)).epsilon(1e-12));
        }
    }
}

TEST_CASE("het_ce logit gradient passes double-precision finite differences") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    const int H = 3, W = 4, C = 3;
    LogitMap z(H, W, C);
    for (float& v : z.data) v = u(rng);
    const LabelMap y = oracle::random_labelmap(rng, H, W, C);
    const RegionMap m = oracle::random_regionmap(rng, H, W);
    const WeightSchedule s =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.3, Ordering::Unlabeled);

    const LossOutput out = het_ce(softmax(z), y, m, s);

    double Z = 0.0;
    for (size_t px = 0; px < z.pixels(); ++px) Z += s.w[static_cast<size_t>(m.data[px])];
    std::vector<double> zd(z.data.begin(), z.data.end());
    auto value = [&]() {
        const std::vector<double> p = oracle::double_softmax(zd, H, W, C);
        double sum = 0.0;
        for (size_t px = 0; px < z.pixels(); ++px) {
            const double wx = s.w[static_cast<size_t>(m.data[px])];
            sum += wx * std::log(std::max(p[px * C + y.data[px]], 1e-12));
        }
        return -sum / Z;
    };
    CHECK(value() == doctest::Approx(out.value).epsilon(1e-6));
    CHECK(oracle::check_gradient_d(zd, out.grad, value, 1e-5) < 1e-4);
}

TEST_CASE("het_ce clamps vanishing target probabilities") {
    ProbMap p(1, 1, 2);
    p.at(0, 0, 0) = 0.0f;
    p.at(0, 0, 1) = 1.0f;
    LabelMap y(1, 1, 0);
    RegionMap m(1, 1, Region::UC);
    const LossOutput out = het_ce(p, y, m, kUniform);
    CHECK(std::isfinite(out.value));
    CHECK(out.value == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("zero-weight regions contribute nothing and get zero gradients") {
    ProbMap p(1, 2, 2);
    p.at(0, 0, 0) = 0.9f;
    p.at(0, 0, 1) = 0.1f;
    p.at(0, 1, 0) = 0.0f;  // would explode if weighted
    p.at(0, 1, 1) = 1.0f;
    LabelMap y(1, 2, 0);
    RegionMap m(1, 2, Region::UC);
    m.at(0, 1) = Region::DS;
    const WeightSchedule s = custom_schedule(1.0, 0.5, 0.25, 0.0);
    const LossOutput out = het_ce(p, y, m, s);
    CHECK(out.value == doctest::Approx(-std::log(0.9)).epsilon(1e-6));
    CHECK(out.grad[2] == 0.0f);
    CHECK(out.grad[3] == 0.0f);
}

TEST_CASE("het_ce rejects an all-zero normalizer") {
    ProbMap p(1, 1, 2, 0.5f);
    LabelMap y(1, 1, 0);
    RegionMap m(1, 1, Region::DS);
    const WeightSchedule s = custom_schedule(1.0, 0.5, 0.25, 0.0);
    CHECK_THROWS_AS(het_ce(p, y, m, s), std::invalid_argument);
}

TEST_CASE("het losses reject shape mismatches") {
    ProbMap p(2, 2, 2, 0.5f);
    LabelMap y(2, 3, 0);
    RegionMap m(2, 2, Region::UC);
    CHECK_THROWS_AS(het_ce(p, y, m, kUniform), std::invalid_argument);
    ProbMap ref(3, 2, 2, 0.5f);
    CHECK_THROWS_AS(het_mse(p, ref, m, kUniform), std::invalid_argument);
    CHECK_THROWS_AS(het_dice(p, ref, m, kUniform), std::invalid_argument);
    RegionMap m2(3, 3, Region::UC);
    CHECK_THROWS_AS(het_ce(p, LabelMap(2, 2, 0), m2, kUniform), std::invalid_argument);
}

TEST_CASE("het_dice is 0 on a perfect prediction and near 1 on the opposite") {
    std::mt19937_64 rng(41);
    const LabelMap y = oracle::random_labelmap(rng, 6, 6, 2);
    const ProbMap onehot = one_hot(y, 2);
    const RegionMap m = oracle::random_regionmap(rng, 6, 6);
    const WeightSchedule s =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.3, Ordering::Labeled);
    CHECK(het_dice(onehot, onehot, m, s).value == doctest::Approx(0.0).epsilon(1e-9));

    ProbMap opposite(6, 6, 2);
    for (size_t px = 0; px < opposite.pixels(); ++px) {
        opposite.data[px * 2] = onehot.data[px * 2 + 1];
        opposite.data[px * 2 + 1] = onehot.data[px * 2];
    }
    CHECK(het_dice(opposite, onehot, m, s).value > 0.999);
}

TEST_CASE("het_dice value matches the naive oracle on random inputs") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const ProbMap p = oracle::random_probmap(rng, 5, 5, 3);
        const ProbMap y = one_hot(oracle::random_labelmap(rng, 5, 5, 3), 3);
        const RegionMap m = oracle::random_regionmap(rng, 5, 5);
        const WeightSchedule s =
            make_schedule({DecayKind::Cosine, 0}, 0.5, Ordering::Labeled);
        const LossOutput out = het_dice(p, y, m, s);
        CHECK(out.value == doctest::Approx(oracle::naive_het_dice(p, y, m, s)).epsilon(1e-12));
    }
}

TEST_CASE("het_dice probability gradient passes finite differences") {
    std::mt19937_64 rng(47);
    ProbMap p = oracle::random_probmap(rng, 4, 4, 3);
    const ProbMap y = one_hot(oracle::random_labelmap(rng, 4, 4, 3), 3);
    const RegionMap m = oracle::random_regionmap(rng, 4, 4);
    const WeightSchedule s =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.6, Ordering::Labeled);

    const LossOutput out = het_dice(p, y, m, s);
    auto value = [&]() { return oracle::naive_het_dice(p, y, m, s); };
    CHECK(value() == doctest::Approx(out.value).epsilon(1e-10));
    CHECK(oracle::check_gradient(p.data, out.grad, value, 1e-3) < 1e-4);
}

TEST_CASE("het_mse hand value and gradient") {
    ProbMap p(1, 1, 2), ref(1, 1, 2);
    p.at(0, 0, 0) = 0.6f;
    p.at(0, 0, 1) = 0.4f;
    ref.at(0, 0, 0) = 1.0f;
    ref.at(0, 0, 1) = 0.0f;
    RegionMap m(1, 1, Region::UC);
    const LossOutput out = het_mse(p, ref, m, kUniform);
    CHECK(out.value == doctest::Approx(0.32).epsilon(1e-6));
    CHECK(out.grad[0] == doctest::Approx(-0.8).epsilon(1e-6));
    CHECK(out.grad[1] == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("het_mse vanishes when prediction equals the reference") {
    std::mt19937_64 rng(53);
    const ProbMap p = oracle::random_probmap(rng, 4, 4, 3);
    const RegionMap m = oracle::random_regionmap(rng, 4, 4);
    const LossOutput out = het_mse(p, p, m, kUniform);
    CHECK(out.value == doctest::Approx(0.0));
    for (float g : out.grad) CHECK(g == 0.0f);
}

TEST_CASE("het_mse value matches the naive oracle on random inputs") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        const ProbMap p = oracle::random_probmap(rng, 5, 6, 3);
        const ProbMap ref = oracle::random_probmap(rng, 5, 6, 3);
        const RegionMap m = oracle::random_regionmap(rng, 5, 6);
        const WeightSchedule s =
            make_schedule({DecayKind::Linear, 0}, 0.3, Ordering::Unlabeled);
        const LossOutput out = het_mse(p, ref, m, s);
        CHECK(out.value == doctest::Approx(oracle::naive_het_mse(p, ref, m, s)).epsilon(1e-12));
    }
}

TEST_CASE("het_mse probability gradient passes finite differences") {
    std::mt19937_64 rng(61);
    ProbMap p = oracle::random_probmap(rng, 4, 4, 3);
    const ProbMap ref = oracle::random_probmap(rng, 4, 4, 3);
    const RegionMap m = oracle::random_regionmap(rng, 4, 4);
    const WeightSchedule s =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.3, Ordering::Unlabeled);

    const LossOutput out = het_mse(p, ref, m, s);
    auto value = [&]() { return oracle::naive_het_mse(p, ref, m, s); };
    CHECK(oracle::check_gradient(p.data, out.grad, value, 1e-3) < 1e-4);
}

TEST_CASE("uniform schedule reduces every loss to its homogeneous form") {
    std::mt19937_64 rng(67);
    const ProbMap p = oracle::random_probmap(rng, 5, 5, 3);
    const LabelMap y = oracle::random_labelmap(rng, 5, 5, 3);
    const RegionMap m1 = oracle::random_regionmap(rng, 5, 5);
    const RegionMap m2 = oracle::random_regionmap(rng, 5, 5);
    // with all weights equal the region layout is irrelevant
    const LossOutput a = het_ce(p, y, m1, kUniform);
    const LossOutput b = het_ce(p, y, m2, kUniform);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    for (size_t i = 0; i < a.grad.size(); ++i) CHECK(a.grad[i] == b.grad[i]);
}
