#pragma once

#include <optional>
#include <vector>

#include "metassl/grid.hpp"

namespace metassl {

// Binary-mask overlap for one class; both-empty convention is 1.0.
double dsc(const LabelMap& pred, const LabelMap& gt, int cls);
double jaccard(const LabelMap& pred, const LabelMap& gt, int cls);

// 95th percentile (nearest-rank) of the combined directed boundary-to-
// nearest-boundary distances, both directions, brute force. Empty/nonempty
// is undefined (nullopt); both empty is 0.
std::optional<double> hd95(const LabelMap& pred, const LabelMap& gt, int cls);

struct ClassMetrics {
    double dsc_pct = 0.0;      // [0, 100]
    double jaccard_pct = 0.0;  // [0, 100]
    std::optional<double> hd95_px;
};

struct EvalReport {
    std::vector<ClassMetrics> per_class;  // foreground classes 1..C-1
    double mean_dsc_pct = 0.0;
    double mean_jaccard_pct = 0.0;
    std::optional<double> mean_hd95_px;  // over defined entries only
    int undefined_hd95_count = 0;
};

// Foreground-class metrics for one image.
EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, int num_classes);

// Dataset aggregate: per-class values averaged over images; undefined HD95
// entries excluded from means and counted.
EvalReport aggregate(const std::vector<EvalReport>& reports);

}  // namespace metassl
