#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "metassl/grid.hpp"

namespace metassl {

// Per-class adaptive confidence thresholds gamma_c with EMA state.
// Single-writer: one updater per training run.
struct ThresholdTracker {
    std::vector<double> gamma;  // length C, each in [0,1]
    double alpha = 0.99;
    // When true, alpha weights the fresh observation (as printed); when false
    // it weights the history (conventional EMA orientation).
    bool alpha_on_observation = true;
    long iteration = 0;

    ThresholdTracker() = default;
    ThresholdTracker(int num_classes, double alpha_ = 0.99, double gamma_init = 0.5)
        : gamma(num_classes, gamma_init), alpha(alpha_) {}
};

struct ClassConfidence {
    std::vector<double> values;  // mean confidence O_c per class
    std::vector<bool> valid;     // class had >= 1 argmax pixel
};

// Mean of p_{x,c} over pixels whose argmax is c; classes without argmax
// pixels are marked invalid.
ClassConfidence class_mean_conf(const ProbMap& p);

// Accumulate class-confidence statistics across several maps (one batch):
// sums and counts merge before the mean, matching a single pooled pass.
ClassConfidence class_mean_conf(const std::vector<const ProbMap*>& maps, int num_classes);

// EMA update gamma_c <- alpha*O_c + (1-alpha)*gamma_c (or swapped per
// orientation). Invalid classes keep their previous gamma. Increments the
// iteration counter.
void update_thresholds(ThresholdTracker& tracker, const ClassConfidence& conf);

// Confidence/consistency quadripartition. For each pixel the reference
// argmax class c* fixes the threshold gamma_{c*}; confident means
// max_prob(ref) > gamma_{c*} (strict), unanimous means the reference argmax
// equals other_labels.
RegionMap quadripartition(const ProbMap& ref, const LabelMap& other_labels,
                          const ThresholdTracker& tracker);

// Pixel counts per region code, summing to height*width.
std::array<size_t, 4> region_sizes(const RegionMap& r);

struct RegionAccuracy {
    std::array<double, 4> accuracy{};  // fraction correct, valid only when present
    std::array<bool, 4> present{};
};

// Per-region fraction of pixels where pred == gt; empty regions flagged
// absent rather than 0.
RegionAccuracy region_accuracy(const RegionMap& r, const LabelMap& pred, const LabelMap& gt);

}  // namespace metassl
