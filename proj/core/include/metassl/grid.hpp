#pragma once

#include <cstdint>
#include <vector>

namespace metassl {

// Dense 2D grids, row-major. For multi-channel grids the channel/class
// axis is the fastest-varying one, so the element for (row, col, c) lives
// at (row * width + col) * channels + c.

struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int ch, float fill = 0.0f)
        : height(h), width(w), channels(ch),
          data(static_cast<size_t>(h) * w * ch, fill) {}

    float& at(int r, int c, int ch) {
        return data[(static_cast<size_t>(r) * width + c) * channels + ch];
    }
    float at(int r, int c, int ch) const {
        return data[(static_cast<size_t>(r) * width + c) * channels + ch];
    }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

struct LogitMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<float> data;

    LogitMap() = default;
    LogitMap(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), num_classes(c),
          data(static_cast<size_t>(h) * w * c, fill) {}

    float& at(int r, int c, int cls) {
        return data[(static_cast<size_t>(r) * width + c) * num_classes + cls];
    }
    float at(int r, int c, int cls) const {
        return data[(static_cast<size_t>(r) * width + c) * num_classes + cls];
    }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

struct ProbMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<float> data;

    ProbMap() = default;
    ProbMap(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), num_classes(c),
          data(static_cast<size_t>(h) * w * c, fill) {}

    float& at(int r, int c, int cls) {
        return data[(static_cast<size_t>(r) * width + c) * num_classes + cls];
    }
    float at(int r, int c, int cls) const {
        return data[(static_cast<size_t>(r) * width + c) * num_classes + cls];
    }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<uint16_t> data;

    LabelMap() = default;
    LabelMap(int h, int w, uint16_t fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    uint16_t& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    uint16_t at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

enum class Region : uint8_t {
    UC = 0,  // unanimous + confident
    US = 1,  // unanimous + suspicious
    DC = 2,  // discrepant + confident
    DS = 3,  // discrepant + suspicious
};

struct RegionMap {
    int height = 0;
    int width = 0;
    std::vector<Region> data;

    RegionMap() = default;
    RegionMap(int h, int w, Region fill = Region::UC)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    Region& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    Region at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

// Single-channel float grid (per-pixel confidence etc.).
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Plane() = default;
    Plane(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
};

// Numerically stable per-pixel softmax (max-shifted). Throws on non-finite input.
ProbMap softmax(const LogitMap& logits);

// Per-pixel index of the maximal probability; ties break to the lowest class index.
LabelMap argmax(const ProbMap& p);
LabelMap argmax(const LogitMap& logits);

// Per-pixel maximal class probability.
Plane max_prob(const ProbMap& p);

// Indicator ProbMap from hard labels. Throws if any index >= num_classes.
ProbMap one_hot(const LabelMap& y, int num_classes);

// Chain rule through softmax: given dL/dp at one pixel (grad_p, length C) and the
// softmax output p at that pixel, accumulate dL/dlogit into grad_logits.
// dL/dz_c = p_c * (g_c - sum_k g_k p_k)
void softmax_backward_pixel(const float* p, const float* grad_p, float* grad_logits,
                            int num_classes);

// Validation at IO boundaries (binary loads, config-driven inputs).
void validate(const ProbMap& p, float tol = 1e-5f);
void validate(const LabelMap& y, int num_classes);

}  // namespace metassl
