#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "metassl/grid.hpp"

namespace metassl {

// Synthetic 2D segmentation scenes: random ellipses (class 1) and
// axis-aligned rectangles (class 2 when C >= 3) over background, rendered
// as class intensity means plus Gaussian noise and a linear illumination
// gradient. Labels are the exact rendered masks.
struct SceneSpec {
    int height = 64;
    int width = 64;
    int num_classes = 3;  // background + shape classes
    int min_shapes = 1;
    int max_shapes = 3;
    std::vector<float> class_means = {0.1f, 0.6f, 0.9f};
    float noise_sigma = 0.05f;
    float illumination_amplitude = 0.1f;
    uint64_t seed = 0;
};

enum class NoiseMode { BoundaryMorph, RandomFlip };

struct NoiseSpec {
    NoiseMode mode = NoiseMode::BoundaryMorph;
    float rate = 0.1f;  // target corrupted-pixel fraction, in [0, 0.5)
    uint64_t seed = 0;
};

struct Sample {
    Image image;
    LabelMap labels;
};

// Deterministic in (spec, n_images); per-image seeds derive from spec.seed.
std::vector<Sample> generate_dataset(const SceneSpec& spec, int n_images);

// Corrupts labels only, never images. BoundaryMorph dilates or erodes each
// shape mask by 1-2 pixels; RandomFlip flips uniformly chosen pixels to a
// uniformly chosen wrong class. Throws if rate >= 0.5.
LabelMap inject_label_noise(const LabelMap& labels, int num_classes, const NoiseSpec& spec);

enum class GeometryTag : uint8_t {
    Identity = 0,
    FlipH,
    FlipV,
    Rot90,
    Rot180,
    Rot270,
};

// One of six geometric transforms drawn from the seed, applied identically
// to image and labels.
struct WeakView {
    Image image;
    LabelMap labels;
    GeometryTag geometry;
};
WeakView weak_augment(const Image& image, const LabelMap& labels, uint64_t seed);

struct StrongAugmentParams {
    bool jitter = true;
    bool cutout = true;
    float jitter_scale_range = 0.15f;  // multiplicative, 1 +- range
    float jitter_shift_range = 0.1f;
    int min_cutouts = 1;
    int max_cutouts = 3;
    float cutout_fill = 0.5f;  // dataset mean intensity
};

// Same geometric transform as the weak view, then photometric extras only
// (intensity jitter, rectangular cutouts), so pixel correspondence with
// the weak view holds.
Image strong_augment(const Image& image, GeometryTag geometry, uint64_t seed,
                     const StrongAugmentParams& params = {});

// Shared helpers for applying/undoing a geometry tag.
Image apply_geometry(const Image& image, GeometryTag g);
LabelMap apply_geometry(const LabelMap& labels, GeometryTag g);
GeometryTag inverse_geometry(GeometryTag g);

// SplitMix64 per-index seed derivation used across the generators.
uint64_t derive_seed(uint64_t base, uint64_t index);

}  // namespace metassl
