#pragma once

#include <cstdint>
#include <string>

#include "metassl/backbones.hpp"
#include "metassl/synthdata.hpp"
#include "metassl/weights.hpp"

namespace metassl {

struct DatasetConfig {
    int height = 64;
    int width = 64;
    int num_classes = 3;
    int n_train = 200;
    int n_val = 20;
    int n_test = 40;
    int min_shapes = 1;
    int max_shapes = 3;
    float noise_sigma = 0.05f;
    float illumination = 0.1f;
};

// One JSON file per run; unknown keys are rejected so every experiment's
// provenance stays auditable.
struct RunConfig {
    BackboneKind backbone = BackboneKind::CPS;

    double beta = 3.0;
    double delta_u = 0.3;
    double delta_l = 0.6;
    DecayKind decay_function = DecayKind::GeneralizedGaussian;

    double alpha_ema = 0.99;
    bool alpha_on_observation = true;  // "observation" vs "history" orientation
    double gamma_init = 0.5;
    bool tracker_all_predictions = false;

    double lambda_scale = 0.1;
    double lambda_sharpness = 5.0;
    int t_max = 300;
    double lr0 = 0.01;
    double lr_power = 0.9;
    double ema_momentum = 0.99;

    int batch_labeled = 4;
    int batch_unlabeled = 4;
    int iters_per_epoch = 0;  // 0 = cover the unlabeled set once per epoch
    int val_every = 1;

    double labeled_fraction = 0.05;
    NoiseMode noise_mode = NoiseMode::BoundaryMorph;
    float noise_rate = 0.1f;

    float dropout_rate = 0.5f;
    int model_width = 16;
    bool unsup_dice = false;

    uint64_t seed = 1;
    uint64_t data_seed = 7;
    std::string output_dir = "out";

    DatasetConfig dataset;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
std::string serialize_config(const RunConfig& cfg);  // all defaults materialized

// Derived settings for the training loop.
TrainSettings to_settings(const RunConfig& cfg);

}  // namespace metassl
