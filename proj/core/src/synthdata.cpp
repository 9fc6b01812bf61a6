#include "metassl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace metassl {

uint64_t derive_seed(uint64_t base, uint64_t index) {
    // splitmix64
    uint64_t z = base + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

void render_ellipse(LabelMap& labels, int cy, int cx, int ry, int rx, uint16_t cls) {
    for (int r = cy - ry; r <= cy + ry; ++r) {
        for (int c = cx - rx; c <= cx + rx; ++c) {
            const double dy = static_cast<double>(r - cy) / ry;
            const double dx = static_cast<double>(c - cx) / rx;
            if (dy * dy + dx * dx <= 1.0) labels.at(r, c) = cls;
        }
    }
}

void render_rect(LabelMap& labels, int r0, int c0, int r1, int c1, uint16_t cls) {
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) labels.at(r, c) = cls;
}

}  // namespace

std::vector<Sample> generate_dataset(const SceneSpec& spec, int n_images) {
    if (n_images < 1) throw std::invalid_argument("generate_dataset: n_images must be >= 1");
    if (spec.num_classes < 2) throw std::invalid_argument("generate_dataset: num_classes < 2");
    if (static_cast<int>(spec.class_means.size()) < spec.num_classes)
        throw std::invalid_argument("generate_dataset: class_means too short");

    const int H = spec.height, W = spec.width;
    const int max_r = std::min(H, W) / 4;
    const int min_r = 3;
    if (max_r < min_r || H < 2 * min_r + 2 || W < 2 * min_r + 2)
        throw std::invalid_argument("generate_dataset: grid too small to place shapes");

    std::vector<Sample> out;
    out.reserve(n_images);
    for (int i = 0; i < n_images; ++i) {
        std::mt19937_64 rng(derive_seed(spec.seed, static_cast<uint64_t>(i)));
        std::uniform_int_distribution<int> n_shapes_d(spec.min_shapes, spec.max_shapes);
        std::uniform_int_distribution<int> radius_d(min_r, max_r);

        LabelMap labels(H, W, 0);
        const int n_shapes = n_shapes_d(rng);
        for (int s = 0; s < n_shapes; ++s) {
            // ellipses carry class 1; rectangles class 2 when available
            const bool rect = spec.num_classes >= 3 && (rng() & 1);
            if (rect) {
                const int rh = radius_d(rng), rw = radius_d(rng);
                std::uniform_int_distribution<int> cy_d(rh, H - 1 - rh), cx_d(rw, W - 1 - rw);
                const int cy = cy_d(rng), cx = cx_d(rng);
                render_rect(labels, cy - rh, cx - rw, cy + rh, cx + rw, 2);
            } else {
                const int ry = radius_d(rng), rx = radius_d(rng);
                std::uniform_int_distribution<int> cy_d(ry, H - 1 - ry), cx_d(rx, W - 1 - rx);
                render_ellipse(labels, cy_d(rng), cx_d(rng), ry, rx, 1);
            }
        }

        Image img(H, W, 1);
        std::normal_distribution<float> noise(0.0f, spec.noise_sigma);
        std::uniform_real_distribution<float> grad_d(-spec.illumination_amplitude,
                                                     spec.illumination_amplitude);
        const float gr = grad_d(rng), gc = grad_d(rng);
        for (int r = 0; r < H; ++r) {
            for (int c = 0; c < W; ++c) {
                float v = spec.class_means[labels.at(r, c)];
                v += gr * (static_cast<float>(r) / H - 0.5f);
                v += gc * (static_cast<float>(c) / W - 0.5f);
                if (spec.noise_sigma > 0.0f) v += noise(rng);
                img.at(r, c, 0) = v;
            }
        }
        out.push_back({std::move(img), std::move(labels)});
    }
    return out;
}

namespace {

std::vector<uint8_t> class_mask(const LabelMap& labels, uint16_t cls) {
    std::vector<uint8_t> m(labels.data.size());
    for (size_t i = 0; i < m.size(); ++i) m[i] = labels.data[i] == cls ? 1 : 0;
    return m;
}

// one step of 8-neighborhood dilation (grow=true) or erosion (grow=false)
std::vector<uint8_t> morph_step(const std::vector<uint8_t>& m, int H, int W, bool grow) {
    std::vector<uint8_t> out(m.size());
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            uint8_t v = grow ? 0 : 1;
            for (int dr = -1; dr <= 1 && (grow ? !v : v); ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    const uint8_t n = (rr >= 0 && rr < H && cc >= 0 && cc < W)
                                          ? m[static_cast<size_t>(rr) * W + cc]
                                          : 0;
                    if (grow && n) { v = 1; break; }
                    if (!grow && !n) { v = 0; break; }
                }
            }
            out[static_cast<size_t>(r) * W + c] = v;
        }
    }
    return out;
}

}  // namespace

LabelMap inject_label_noise(const LabelMap& labels, int num_classes, const NoiseSpec& spec) {
    if (spec.rate < 0.0f || spec.rate >= 0.5f)
        throw std::invalid_argument("inject_label_noise: rate must lie in [0, 0.5)");
    LabelMap out = labels;
    if (spec.rate == 0.0f) return out;

    const int H = labels.height, W = labels.width;
    const size_t n = labels.pixels();
    const size_t target = static_cast<size_t>(std::lround(spec.rate * static_cast<double>(n)));
    std::mt19937_64 rng(spec.seed);

    if (spec.mode == NoiseMode::RandomFlip) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        std::uniform_int_distribution<int> cls_d(0, num_classes - 2);
        for (size_t i = 0; i < target && i < n; ++i) {
            const size_t px = idx[i];
            int c = cls_d(rng);
            if (c >= labels.data[px]) ++c;  // skip the current class
            out.data[px] = static_cast<uint16_t>(c);
        }
        return out;
    }

    // boundary morph: per shape class, randomly dilate or erode; collect the
    // label changes of a 1-pixel morph first, then the second ring, and apply
    // them in random order until the target corruption count is reached.
    struct Change { size_t px; uint16_t new_label; };
    std::vector<Change> ring1, ring2;
    for (uint16_t cls = 1; cls < num_classes; ++cls) {
        auto m0 = class_mask(labels, cls);
        bool any = false;
        for (uint8_t v : m0) any |= v;
        if (!any) continue;
        const bool grow = rng() & 1;
        auto m1 = morph_step(m0, H, W, grow);
        auto m2 = morph_step(m1, H, W, grow);
        const uint16_t new_label = grow ? cls : 0;
        for (size_t px = 0; px < n; ++px) {
            if (m1[px] != m0[px]) ring1.push_back({px, new_label});
            else if (m2[px] != m1[px]) ring2.push_back({px, new_label});
        }
    }
    std::shuffle(ring1.begin(), ring1.end(), rng);
    std::shuffle(ring2.begin(), ring2.end(), rng);

    size_t applied = 0;
    for (const auto& list : {ring1, ring2}) {
        for (const Change& ch : list) {
            if (applied >= target) break;
            if (out.data[ch.px] != ch.new_label) {
                out.data[ch.px] = ch.new_label;
                ++applied;
            }
        }
    }
    return out;
}

Image apply_geometry(const Image& img, GeometryTag g) {
    const int H = img.height, W = img.width, CH = img.channels;
    auto make = [&](int h, int w) { return Image(h, w, CH); };
    Image out = (g == GeometryTag::Rot90 || g == GeometryTag::Rot270) ? make(W, H) : make(H, W);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            int sr = r, sc = c;
            switch (g) {
                case GeometryTag::Identity: break;
                case GeometryTag::FlipH: sc = W - 1 - c; break;
                case GeometryTag::FlipV: sr = H - 1 - r; break;
                case GeometryTag::Rot90: sr = H - 1 - c; sc = r; break;
                case GeometryTag::Rot180: sr = H - 1 - r; sc = W - 1 - c; break;
                case GeometryTag::Rot270: sr = c; sc = W - 1 - r; break;
            }
            for (int ch = 0; ch < CH; ++ch) out.at(r, c, ch) = img.at(sr, sc, ch);
        }
    }
    return out;
}

LabelMap apply_geometry(const LabelMap& labels, GeometryTag g) {
    const int H = labels.height, W = labels.width;
    LabelMap out = (g == GeometryTag::Rot90 || g == GeometryTag::Rot270) ? LabelMap(W, H)
                                                                         : LabelMap(H, W);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            int sr = r, sc = c;
            switch (g) {
                case GeometryTag::Identity: break;
                case GeometryTag::FlipH: sc = W - 1 - c; break;
                case GeometryTag::FlipV: sr = H - 1 - r; break;
                case GeometryTag::Rot90: sr = H - 1 - c; sc = r; break;
                case GeometryTag::Rot180: sr = H - 1 - r; sc = W - 1 - c; break;
                case GeometryTag::Rot270: sr = c; sc = W - 1 - r; break;
            }
            out.at(r, c) = labels.at(sr, sc);
        }
    }
    return out;
}

GeometryTag inverse_geometry(GeometryTag g) {
    switch (g) {
        case GeometryTag::Rot90: return GeometryTag::Rot270;
        case GeometryTag::Rot270: return GeometryTag::Rot90;
        default: return g;
    }
}

WeakView weak_augment(const Image& image, const LabelMap& labels, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> tag_d(0, 5);
    const auto g = static_cast<GeometryTag>(tag_d(rng));
    return {apply_geometry(image, g), apply_geometry(labels, g), g};
}

Image strong_augment(const Image& image, GeometryTag geometry, uint64_t seed,
                     const StrongAugmentParams& params) {
    Image out = apply_geometry(image, geometry);
    std::mt19937_64 rng(seed);

    if (params.jitter) {
        std::uniform_real_distribution<float> scale_d(1.0f - params.jitter_scale_range,
                                                      1.0f + params.jitter_scale_range);
        std::uniform_real_distribution<float> shift_d(-params.jitter_shift_range,
                                                      params.jitter_shift_range);
        const float s = scale_d(rng), b = shift_d(rng);
        for (float& v : out.data) v = v * s + b;
    }

    if (params.cutout) {
        std::uniform_int_distribution<int> k_d(params.min_cutouts, params.max_cutouts);
        const int k = k_d(rng);
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> h_d(2, std::max(2, out.height / 4));
            std::uniform_int_distribution<int> w_d(2, std::max(2, out.width / 4));
            const int ph = h_d(rng), pw = w_d(rng);
            std::uniform_int_distribution<int> r_d(0, out.height - ph), c_d(0, out.width - pw);
            const int r0 = r_d(rng), c0 = c_d(rng);
            for (int r = r0; r < r0 + ph; ++r)
                for (int c = c0; c < c0 + pw; ++c)
                    for (int ch = 0; ch < out.channels; ++ch)
                        out.at(r, c, ch) = params.cutout_fill;
        }
    }
    return out;
}

}  // namespace metassl
