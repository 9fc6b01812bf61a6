#pragma once

#include "metassl/grid.hpp"
#include "metassl/partition.hpp"
#include "metassl/weights.hpp"

namespace metassl {

// Scalar loss plus per-pixel per-class partial derivatives. For het_ce the
// gradient is taken with respect to the logits feeding the softmax; for
// het_dice and het_mse it is with respect to the probabilities directly
// (convert with softmax_backward_pixel when chaining into a network).
struct LossOutput {
    double value = 0.0;
    std::vector<float> grad;  // same layout as the supervised ProbMap/LogitMap
};

// Quadripartition-weighted cross entropy against hard targets. The target
// labels and region map are constants; no gradient flows into them.
// value = -(1/Z) sum_t sum_{x in Omega_t} w_t log p_{x,target(x)}
// grad wrt logits at (x,c): (w_x/Z)(p_{x,c} - [c == target(x)])
LossOutput het_ce(const ProbMap& p, const LabelMap& target, const RegionMap& regions,
                  const WeightSchedule& w);

// Quadripartition-weighted smooth Dice against one-hot targets; smoothing
// eps added to numerator and denominator so absent classes contribute 0.
// Weights are normalized by their maximum internally, making the loss
// exactly invariant under uniform scaling of the schedule.
LossOutput het_dice(const ProbMap& p, const ProbMap& target_onehot, const RegionMap& regions,
                    const WeightSchedule& w, double eps = 1e-5);

// Quadripartition-weighted squared error against a reference prediction
// (consistency-style); ref is constant.
LossOutput het_mse(const ProbMap& p, const ProbMap& ref, const RegionMap& regions,
                   const WeightSchedule& w);

}  // namespace metassl
