#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "metassl/synthdata.hpp"

using namespace metassl;

namespace {
size_t count_diff(const LabelMap& a, const LabelMap& b) {
    size_t n = 0;
    for (size_t i = 0; i < a.data.size(); ++i) n += a.data[i] != b.data[i];
    return n;
}

// smallest Chebyshev distance from px to any pixel whose original label differs
int chebyshev_to_boundary(const LabelMap& labels, size_t px) {
    const int H = labels.height, W = labels.width;
    const int r0 = static_cast<int>(px) / W, c0 = static_cast<int>(px) % W;
    int best = H + W;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            if (labels.at(r, c) != labels.at(r0, c0))
                best = std::min(best, std::max(std::abs(r - r0), std::abs(c - c0)));
    return best;
}
}  // namespace

TEST_CASE("derive_seed is deterministic and spreads nearby indices") {
    CHECK(derive_seed(7, 0) == derive_seed(7, 0));
    std::set<uint64_t> seen;
    for (uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(7, i));
    CHECK(seen.size() == 100);
    CHECK(derive_seed(7, 0) != derive_seed(8, 0));
}

TEST_CASE("generate_dataset is deterministic in the spec") {
    SceneSpec spec;
    spec.seed = 11;
    const auto a = generate_dataset(spec, 4);
    const auto b = generate_dataset(spec, 4);
    REQUIRE(a.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(a[i].image.data == b[i].image.data);
        CHECK(a[i].labels.data == b[i].labels.data);
    }
    spec.seed = 12;
    const auto c = generate_dataset(spec, 4);
    CHECK(a[0].image.data != c[0].image.data);
}

TEST_CASE("a longer run extends a shorter one image-for-image") {
    SceneSpec spec;
    spec.seed = 13;
    const auto small = generate_dataset(spec, 3);
    const auto big = generate_dataset(spec, 6);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(small[i].image.data == big[i].image.data);
        CHECK(small[i].labels.data == big[i].labels.data);
    }
}

TEST_CASE("generated scenes are well-formed") {
    SceneSpec spec;
    spec.seed = 17;
    const auto data = generate_dataset(spec, 16);
    bool saw_class1 = false, saw_class2 = false;
    for (const Sample& s : data) {
        CHECK(s.image.height == 64);
        CHECK(s.image.width == 64);
        CHECK(s.image.channels == 1);
        for (float v : s.image.data) CHECK(std::isfinite(v));
        size_t bg = 0;
        for (uint16_t y : s.labels.data) {
            CHECK(y < 3);
            bg += y == 0;
            saw_class1 |= y == 1;
            saw_class2 |= y == 2;
        }
        CHECK(bg > 0);  // shapes never fill the frame
    }
    CHECK(saw_class1);
    CHECK(saw_class2);
}

TEST_CASE("foreground pixels are brighter than background on average") {
    SceneSpec spec;
    spec.seed = 19;
    const auto data = generate_dataset(spec, 8);
    double bg = 0.0, fg = 0.0;
    size_t nbg = 0, nfg = 0;
    for (const Sample& s : data) {
        for (size_t i = 0; i < s.labels.data.size(); ++i) {
            if (s.labels.data[i] == 0) { bg += s.image.data[i]; ++nbg; }
            else { fg += s.image.data[i]; ++nfg; }
        }
    }
    REQUIRE(nfg > 0);
    CHECK(fg / nfg > bg / nbg + 0.3);
}

TEST_CASE("generate_dataset rejects bad specs") {
    SceneSpec spec;
    CHECK_THROWS_AS(generate_dataset(spec, 0), std::invalid_argument);
    spec.num_classes = 1;
    CHECK_THROWS_AS(generate_dataset(spec, 1), std::invalid_argument);
    spec = SceneSpec{};
    spec.num_classes = 4;  // class_means has only 3 entries
    CHECK_THROWS_AS(generate_dataset(spec, 1), std::invalid_argument);
    spec = SceneSpec{};
    spec.height = 4;
    spec.width = 4;
    CHECK_THROWS_AS(generate_dataset(spec, 1), std::invalid_argument);
}

TEST_CASE("random-flip noise hits the target rate with wrong classes only") {
    SceneSpec spec;
    spec.seed = 23;
    const LabelMap clean = generate_dataset(spec, 1)[0].labels;

    NoiseSpec ns{NoiseMode::RandomFlip, 0.1f, 5};
    const LabelMap noisy = inject_label_noise(clean, 3, ns);
    const size_t changed = count_diff(clean, noisy);
    CHECK(changed == static_cast<size_t>(std::lround(0.1 * 64 * 64)));
    for (size_t i = 0; i < clean.data.size(); ++i) {
        CHECK(noisy.data[i] < 3);
        if (clean.data[i] != noisy.data[i]) CHECK(noisy.data[i] != clean.data[i]);
    }
    // deterministic in the seed
    CHECK(inject_label_noise(clean, 3, ns).data == noisy.data);
    ns.seed = 6;
    CHECK(inject_label_noise(clean, 3, ns).data != noisy.data);
}

TEST_CASE("boundary-morph noise stays within two pixels of a class boundary") {
    SceneSpec spec;
    spec.seed = 29;
    const auto data = generate_dataset(spec, 4);
    for (size_t i = 0; i < data.size(); ++i) {
        const LabelMap& clean = data[i].labels;
        NoiseSpec ns{NoiseMode::BoundaryMorph, 0.1f, 31 + i};
        const LabelMap noisy = inject_label_noise(clean, 3, ns);
        const size_t changed = count_diff(clean, noisy);
        CHECK(changed > 0);
        CHECK(changed <= static_cast<size_t>(std::lround(0.1 * 64 * 64)));
        for (size_t px = 0; px < clean.data.size(); ++px)
            if (clean.data[px] != noisy.data[px])
                CHECK(chebyshev_to_boundary(clean, px) <= 2);
    }
}

TEST_CASE("noise injection leaves a zero-rate map untouched and rejects rate >= 0.5") {
    LabelMap y(8, 8, 0);
    y.at(3, 3) = 1;
    CHECK(inject_label_noise(y, 2, {NoiseMode::RandomFlip, 0.0f, 1}).data == y.data);
    CHECK_THROWS_AS(inject_label_noise(y, 2, {NoiseMode::RandomFlip, 0.5f, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(inject_label_noise(y, 2, {NoiseMode::BoundaryMorph, -0.1f, 1}),
                    std::invalid_argument);
}

TEST_CASE("geometry transforms are label-consistent bijections") {
    SceneSpec spec;
    spec.seed = 37;
    spec.height = 12;
    spec.width = 16;  // non-square exercises the rotation shape swap
    const Sample s = generate_dataset(spec, 1)[0];

    for (int t = 0; t < 6; ++t) {
        const auto g = static_cast<GeometryTag>(t);
        const Image img = apply_geometry(s.image, g);
        const LabelMap lab = apply_geometry(s.labels, g);
        if (g == GeometryTag::Rot90 || g == GeometryTag::Rot270) {
            CHECK(img.height == 16);
            CHECK(img.width == 12);
        } else {
            CHECK(img.height == 12);
            CHECK(img.width == 16);
        }
        // round trip through the inverse restores the original
        CHECK(apply_geometry(img, inverse_geometry(g)).data == s.image.data);
        CHECK(apply_geometry(lab, inverse_geometry(g)).data == s.labels.data);

        // a transform permutes pixels: value multisets are preserved
        auto sorted_img = img.data, sorted_orig = s.image.data;
        std::sort(sorted_img.begin(), sorted_img.end());
        std::sort(sorted_orig.begin(), sorted_orig.end());
        CHECK(sorted_img == sorted_orig);
    }
}

TEST_CASE("weak_augment is deterministic and keeps image/label alignment") {
    SceneSpec spec;
    spec.seed = 41;
    const Sample s = generate_dataset(spec, 1)[0];

    const WeakView a = weak_augment(s.image, s.labels, 77);
    const WeakView b = weak_augment(s.image, s.labels, 77);
    CHECK(a.geometry == b.geometry);
    CHECK(a.image.data == b.image.data);
    CHECK(a.labels.data == b.labels.data);
    CHECK(a.image.data == apply_geometry(s.image, a.geometry).data);
    CHECK(a.labels.data == apply_geometry(s.labels, a.geometry).data);

    // all six geometries appear across seeds
    std::set<int> tags;
    for (uint64_t seed = 0; seed < 64; ++seed)
        tags.insert(static_cast<int>(weak_augment(s.image, s.labels, seed).geometry));
    CHECK(tags.size() == 6);
}

TEST_CASE("strong_augment shares the weak geometry and only edits photometry") {
    SceneSpec spec;
    spec.seed = 43;
    const Sample s = generate_dataset(spec, 1)[0];
    const WeakView weak = weak_augment(s.image, s.labels, 78);

    const Image strong = strong_augment(s.image, weak.geometry, 79);
    CHECK(strong.height == weak.image.height);
    CHECK(strong.width == weak.image.width);
    CHECK(strong.data == strong_augment(s.image, weak.geometry, 79).data);
    CHECK(strong.data != weak.image.data);

    // with jitter and cutout disabled the strong view is exactly the weak view
    StrongAugmentParams off;
    off.jitter = false;
    off.cutout = false;
    CHECK(strong_augment(s.image, weak.geometry, 79, off).data == weak.image.data);

    // jitter alone is a per-pixel affine map: v -> v*sc + sh for some sc, sh
    StrongAugmentParams jitter_only;
    jitter_only.cutout = false;
    const Image jit = strong_augment(s.image, weak.geometry, 80, jitter_only);
    const float x0 = weak.image.data[0], x1 = weak.image.data[1];
    REQUIRE(std::fabs(x0 - x1) > 1e-6f);
    const double sc = (static_cast<double>(jit.data[0]) - jit.data[1]) / (x0 - x1);
    const double sh = jit.data[0] - sc * x0;
    for (size_t i = 0; i < jit.data.size(); ++i)
        CHECK(jit.data[i] == doctest::Approx(sc * weak.image.data[i] + sh).epsilon(1e-4));

    // cutout alone replaces rectangles with the fill value and nothing else
    StrongAugmentParams cut_only;
    cut_only.jitter = false;
    const Image cut = strong_augment(s.image, weak.geometry, 81, cut_only);
    size_t filled = 0;
    for (size_t i = 0; i < cut.data.size(); ++i) {
        if (cut.data[i] != weak.image.data[i]) {
            CHECK(cut.data[i] == 0.5f);
            ++filled;
        }
    }
    CHECK(filled >= 4);  // at least one 2x2 patch
}
