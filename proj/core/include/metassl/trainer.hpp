#pragma once

#include <ostream>
#include <vector>

#include "metassl/backbones.hpp"
#include "metassl/config.hpp"
#include "metassl/metrics.hpp"
#include "metassl/synthdata.hpp"

namespace metassl {

// The benchmark as the trainer consumes it: training images with a labeled
// subset (labels possibly corrupted), clean labels kept aside for region
// diagnostics, plus validation and test splits.
struct DatasetSplits {
    std::vector<Sample> train;              // labels of labeled subset may be noisy
    std::vector<LabelMap> clean_labels;     // exact render masks, all train images
    std::vector<size_t> labeled_indices;
    std::vector<size_t> unlabeled_indices;
    std::vector<Sample> val;
    std::vector<Sample> test;
    int num_classes = 0;
    double achieved_noise_fraction = 0.0;   // over labeled images
};

// Deterministic benchmark construction from the config's dataset block,
// labeled fraction, and noise settings.
DatasetSplits build_benchmark(const RunConfig& cfg);

struct EpochRow {
    int epoch = 0;
    double sup_loss = 0.0;
    double unsup_loss = 0.0;
    double lambda = 0.0;
    std::vector<double> gamma;
    std::array<size_t, 4> labeled_regions{};
    std::array<size_t, 4> unlabeled_regions{};
    double val_dsc = 0.0;  // mean foreground DSC in percent, -1 when skipped
};

std::string csv_header(int num_classes);
std::string csv_row(const EpochRow& row);

struct TrainResult {
    TrainState state;
    std::vector<EpochRow> rows;
};

// Full training loop: t_max epochs of deterministic batch cycling; one CSV
// row per epoch when csv is non-null. Throws on non-finite losses.
TrainResult train(const RunConfig& cfg, const DatasetSplits& data, std::ostream* csv);

// Mean foreground DSC (percent) of a model over a split.
double mean_dsc_over(const TinySegNet& net, const std::vector<Sample>& split, int num_classes);

// Inference-time prediction for evaluation and export.
LabelMap predict(const TinySegNet& net, const Image& image);

// Final-epoch unlabeled-partition diagnostic: quadripartition of the
// reference prediction on every unlabeled training image, accuracy of the
// supervised prediction per region against clean labels, pooled.
RegionAccuracy unlabeled_region_accuracy(const TrainState& state, const DatasetSplits& data);

}  // namespace metassl
