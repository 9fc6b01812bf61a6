#include "metassl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace metassl {

namespace {
using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

DecayKind parse_decay(const std::string& s) {
    if (s == "generalized-gaussian") return DecayKind::GeneralizedGaussian;
    if (s == "linear") return DecayKind::Linear;
    if (s == "reciprocal") return DecayKind::Reciprocal;
    if (s == "cosine") return DecayKind::Cosine;
    throw std::invalid_argument("config: unknown decay_function '" + s + "'");
}

std::string decay_name(DecayKind k) {
    switch (k) {
        case DecayKind::GeneralizedGaussian: return "generalized-gaussian";
        case DecayKind::Linear: return "linear";
        case DecayKind::Reciprocal: return "reciprocal";
        case DecayKind::Cosine: return "cosine";
    }
    return "?";
}

NoiseMode parse_noise(const std::string& s) {
    if (s == "boundary-morph") return NoiseMode::BoundaryMorph;
    if (s == "random-flip") return NoiseMode::RandomFlip;
    throw std::invalid_argument("config: unknown noise_mode '" + s + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void require_range(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
}
}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }

    static const std::set<std::string> top_keys = {
        "backbone", "beta", "delta_u", "delta_l", "decay_function", "alpha_ema",
        "ema_orientation", "gamma_init", "tracker_all_predictions", "lambda_scale",
        "lambda_sharpness", "t_max", "lr0", "lr_power", "ema_momentum", "batch_labeled",
        "batch_unlabeled", "iters_per_epoch", "val_every", "labeled_fraction", "noise_mode",
        "noise_rate", "dropout_rate", "model_width", "unsup_dice", "seed", "data_seed",
        "output_dir", "dataset"};
    check_keys(j, top_keys, "top level");

    RunConfig cfg;
    if (j.contains("backbone")) {
        const auto name = j.at("backbone").get<std::string>();
        const auto k = parse_backbone(name);
        if (!k) throw std::invalid_argument("config: unknown backbone '" + name + "'");
        cfg.backbone = *k;
    }
    get_if(j, "beta", cfg.beta);
    get_if(j, "delta_u", cfg.delta_u);
    get_if(j, "delta_l", cfg.delta_l);
    if (j.contains("decay_function"))
        cfg.decay_function = parse_decay(j.at("decay_function").get<std::string>());
    get_if(j, "alpha_ema", cfg.alpha_ema);
    if (j.contains("ema_orientation")) {
        const auto s = j.at("ema_orientation").get<std::string>();
        if (s == "observation") cfg.alpha_on_observation = true;
        else if (s == "history") cfg.alpha_on_observation = false;
        else throw std::invalid_argument("config: ema_orientation must be observation|history");
    }
    get_if(j, "gamma_init", cfg.gamma_init);
    get_if(j, "tracker_all_predictions", cfg.tracker_all_predictions);
    get_if(j, "lambda_scale", cfg.lambda_scale);
    get_if(j, "lambda_sharpness", cfg.lambda_sharpness);
    get_if(j, "t_max", cfg.t_max);
    get_if(j, "lr0", cfg.lr0);
    get_if(j, "lr_power", cfg.lr_power);
    get_if(j, "ema_momentum", cfg.ema_momentum);
    get_if(j, "batch_labeled", cfg.batch_labeled);
    get_if(j, "batch_unlabeled", cfg.batch_unlabeled);
    get_if(j, "iters_per_epoch", cfg.iters_per_epoch);
    get_if(j, "val_every", cfg.val_every);
    get_if(j, "labeled_fraction", cfg.labeled_fraction);
    if (j.contains("noise_mode")) cfg.noise_mode = parse_noise(j.at("noise_mode").get<std::string>());
    get_if(j, "noise_rate", cfg.noise_rate);
    get_if(j, "dropout_rate", cfg.dropout_rate);
    get_if(j, "model_width", cfg.model_width);
    get_if(j, "unsup_dice", cfg.unsup_dice);
    get_if(j, "seed", cfg.seed);
    get_if(j, "data_seed", cfg.data_seed);
    get_if(j, "output_dir", cfg.output_dir);

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        static const std::set<std::string> ds_keys = {
            "height", "width", "num_classes", "n_train", "n_val", "n_test",
            "min_shapes", "max_shapes", "noise_sigma", "illumination"};
        check_keys(d, ds_keys, "dataset");
        get_if(d, "height", cfg.dataset.height);
        get_if(d, "width", cfg.dataset.width);
        get_if(d, "num_classes", cfg.dataset.num_classes);
        get_if(d, "n_train", cfg.dataset.n_train);
        get_if(d, "n_val", cfg.dataset.n_val);
        get_if(d, "n_test", cfg.dataset.n_test);
        get_if(d, "min_shapes", cfg.dataset.min_shapes);
        get_if(d, "max_shapes", cfg.dataset.max_shapes);
        get_if(d, "noise_sigma", cfg.dataset.noise_sigma);
        get_if(d, "illumination", cfg.dataset.illumination);
    }

    require_range(cfg.beta >= 1.0, "beta must be >= 1");
    require_range(cfg.delta_u > 0.0 && 3.0 * cfg.delta_u <= 2.0, "delta_u must satisfy 0 < 3*delta_u <= 2");
    require_range(cfg.delta_l > 0.0 && 3.0 * cfg.delta_l <= 2.0, "delta_l must satisfy 0 < 3*delta_l <= 2");
    require_range(cfg.alpha_ema >= 0.0 && cfg.alpha_ema <= 1.0, "alpha_ema must lie in [0,1]");
    require_range(cfg.gamma_init >= 0.0 && cfg.gamma_init <= 1.0, "gamma_init must lie in [0,1]");
    require_range(cfg.t_max >= 1, "t_max must be >= 1");
    require_range(cfg.lr0 > 0.0, "lr0 must be > 0");
    require_range(cfg.ema_momentum >= 0.0 && cfg.ema_momentum <= 1.0, "ema_momentum must lie in [0,1]");
    require_range(cfg.batch_labeled >= 1, "batch_labeled must be >= 1");
    require_range(cfg.batch_unlabeled >= 1, "batch_unlabeled must be >= 1");
    require_range(cfg.iters_per_epoch >= 0, "iters_per_epoch must be >= 0");
    require_range(cfg.val_every >= 1, "val_every must be >= 1");
    require_range(cfg.labeled_fraction > 0.0 && cfg.labeled_fraction <= 1.0,
                  "labeled_fraction must lie in (0,1]");
    require_range(cfg.noise_rate >= 0.0f && cfg.noise_rate < 0.5f, "noise_rate must lie in [0,0.5)");
    require_range(cfg.dropout_rate >= 0.0f && cfg.dropout_rate < 1.0f,
                  "dropout_rate must lie in [0,1)");
    require_range(cfg.model_width >= 1, "model_width must be >= 1");
    require_range(cfg.dataset.num_classes >= 2, "dataset.num_classes must be >= 2");
    require_range(cfg.dataset.n_train >= 1, "dataset.n_train must be >= 1");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["backbone"] = backbone_name(cfg.backbone);
    j["beta"] = cfg.beta;
    j["delta_u"] = cfg.delta_u;
    j["delta_l"] = cfg.delta_l;
    j["decay_function"] = decay_name(cfg.decay_function);
    j["alpha_ema"] = cfg.alpha_ema;
    j["ema_orientation"] = cfg.alpha_on_observation ? "observation" : "history";
    j["gamma_init"] = cfg.gamma_init;
    j["tracker_all_predictions"] = cfg.tracker_all_predictions;
    j["lambda_scale"] = cfg.lambda_scale;
    j["lambda_sharpness"] = cfg.lambda_sharpness;
    j["t_max"] = cfg.t_max;
    j["lr0"] = cfg.lr0;
    j["lr_power"] = cfg.lr_power;
    j["ema_momentum"] = cfg.ema_momentum;
    j["batch_labeled"] = cfg.batch_labeled;
    j["batch_unlabeled"] = cfg.batch_unlabeled;
    j["iters_per_epoch"] = cfg.iters_per_epoch;
    j["val_every"] = cfg.val_every;
    j["labeled_fraction"] = cfg.labeled_fraction;
    j["noise_mode"] = cfg.noise_mode == NoiseMode::BoundaryMorph ? "boundary-morph" : "random-flip";
    j["noise_rate"] = cfg.noise_rate;
    j["dropout_rate"] = cfg.dropout_rate;
    j["model_width"] = cfg.model_width;
    j["unsup_dice"] = cfg.unsup_dice;
    j["seed"] = cfg.seed;
    j["data_seed"] = cfg.data_seed;
    j["output_dir"] = cfg.output_dir;
    j["dataset"] = {{"height", cfg.dataset.height},
                    {"width", cfg.dataset.width},
                    {"num_classes", cfg.dataset.num_classes},
                    {"n_train", cfg.dataset.n_train},
                    {"n_val", cfg.dataset.n_val},
                    {"n_test", cfg.dataset.n_test},
                    {"min_shapes", cfg.dataset.min_shapes},
                    {"max_shapes", cfg.dataset.max_shapes},
                    {"noise_sigma", cfg.dataset.noise_sigma},
                    {"illumination", cfg.dataset.illumination}};
    return j.dump(2);
}

TrainSettings to_settings(const RunConfig& cfg) {
    TrainSettings s;
    s.kind = cfg.backbone;
    const DecayFunction f{cfg.decay_function, cfg.beta};
    if (is_plain(cfg.backbone)) {
        s.w_labeled = uniform_schedule(Ordering::Labeled);
        s.w_unlabeled = uniform_schedule(Ordering::Unlabeled);
    } else {
        s.w_labeled = make_schedule(f, cfg.delta_l, Ordering::Labeled);
        s.w_unlabeled = make_schedule(f, cfg.delta_u, Ordering::Unlabeled);
    }
    s.lambda_scale = cfg.lambda_scale;
    s.lambda_sharpness = cfg.lambda_sharpness;
    s.t_max = cfg.t_max;
    s.lr0 = cfg.lr0;
    s.lr_power = cfg.lr_power;
    s.ema_momentum = cfg.ema_momentum;
    s.dropout_rate = cfg.dropout_rate;
    s.unsup_dice = cfg.unsup_dice;
    s.tracker_all_predictions = cfg.tracker_all_predictions;
    return s;
}

}  // namespace metassl
