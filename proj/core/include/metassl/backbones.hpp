#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "metassl/grid.hpp"
#include "metassl/hetloss.hpp"
#include "metassl/model.hpp"
#include "metassl/partition.hpp"
#include "metassl/synthdata.hpp"
#include "metassl/weights.hpp"

namespace metassl {

enum class BackboneKind {
    MT,
    CPS,
    FixMatch,
    RDrop,
    SL,
    PlainMT,
    PlainCPS,
    PlainFixMatch,
    PlainRDrop,
};

bool is_plain(BackboneKind k);
bool uses_two_models(BackboneKind k);  // CPS variants hold two nets, MT holds a teacher
std::string backbone_name(BackboneKind k);
std::optional<BackboneKind> parse_backbone(const std::string& name);

struct LabeledExample {
    const Image* image = nullptr;
    const LabelMap* labels = nullptr;
};

struct Batch {
    std::vector<LabeledExample> labeled;
    std::vector<const Image*> unlabeled;
};

struct TrainSettings {
    BackboneKind kind = BackboneKind::CPS;
    WeightSchedule w_labeled;
    WeightSchedule w_unlabeled;
    double lambda_scale = 0.1;
    double lambda_sharpness = 5.0;
    int t_max = 300;
    double lr0 = 0.01;
    double lr_power = 0.9;
    double ema_momentum = 0.99;  // MT teacher
    float dropout_rate = 0.5f;   // R-Drop passes
    bool unsup_dice = false;     // add het_dice on unlabeled pseudo-labels
    bool tracker_all_predictions = false;  // EMA statistic population
    StrongAugmentParams strong_params;     // FixMatch photometric extras
};

struct TrainState {
    TrainSettings cfg;
    TinySegNet model_a;                 // student / model A
    std::optional<TinySegNet> model_b;  // MT teacher or CPS model B
    ThresholdTracker tracker;
    int epoch = 0;
    long step_index = 0;
    uint64_t seed = 0;  // base for per-step derived RNG streams
};

struct StepReport {
    double sup_loss = 0.0;
    double unsup_loss = 0.0;
    double lambda = 0.0;
    std::array<size_t, 4> labeled_regions{};
    std::array<size_t, 4> unlabeled_regions{};
    std::vector<double> gamma;
};

TrainState make_state(const TrainSettings& cfg, uint64_t seed, int in_channels,
                      int hidden_width, int num_classes, double alpha_ema,
                      bool alpha_on_observation, double gamma_init);

// Labeled-image loss: quadripartition of the reference against y* with the
// labeled ordering, then het CE + het Dice against y*. Gradient is with
// respect to the supervised branch's logits.
struct SupervisedLoss {
    double value = 0.0;
    std::vector<float> d_logits;
    RegionMap regions;
};
SupervisedLoss supervised_het_loss(const ProbMap& p, const ProbMap& ref, const LabelMap& ystar,
                                   const ThresholdTracker& tracker, const WeightSchedule& w);

// Unlabeled-image loss: pseudo-label CE (optionally + Dice) against the
// reference argmax, weighted by quadripartition(ref, argmax(p)).
struct UnsupervisedLoss {
    double value = 0.0;
    std::vector<float> d_logits;
    RegionMap regions;
};
UnsupervisedLoss unsupervised_het_loss(const ProbMap& p, const ProbMap& ref,
                                       const ThresholdTracker& tracker, const WeightSchedule& w,
                                       bool with_dice);

// One optimization step of the configured backbone. Updates models and the
// threshold tracker; deterministic in (state, batch).
StepReport step(TrainState& state, const Batch& batch);

}  // namespace metassl
