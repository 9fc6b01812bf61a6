#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metassl/config.hpp"
#include "metassl/io.hpp"
#include "metassl/metrics.hpp"
#include "metassl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metassl;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::string sample_name(const char* split, int i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03d.%s", split, i, ext);
    return buf;
}

int cmd_weights(double beta, double delta, const std::string& ordering,
                const std::string& function) {
    DecayFunction f;
    f.beta = beta;
    if (function == "generalized-gaussian") f.kind = DecayKind::GeneralizedGaussian;
    else if (function == "linear") f.kind = DecayKind::Linear;
    else if (function == "reciprocal") f.kind = DecayKind::Reciprocal;
    else if (function == "cosine") f.kind = DecayKind::Cosine;
    else {
        std::cerr << "unknown function: " << function << "\n";
        return kExitBadInput;
    }
    const Ordering ord = ordering == "labeled" ? Ordering::Labeled : Ordering::Unlabeled;
    WeightSchedule s;
    try {
        s = make_schedule(f, delta, ord);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }
    std::printf("UC %.3f US %.3f DC %.3f DS %.3f\n", s.weight(Region::UC), s.weight(Region::US),
                s.weight(Region::DC), s.weight(Region::DS));
    return 0;
}

void write_split(const std::vector<Sample>& split, const char* name, const fs::path& dir,
                 json& files) {
    json list = json::array();
    for (size_t i = 0; i < split.size(); ++i) {
        const auto img_name = sample_name(name, static_cast<int>(i), "img0");
        const auto lab_name = sample_name(name, static_cast<int>(i), "lmap");
        write_img(split[i].image, (dir / img_name).string());
        write_lmap(split[i].labels, (dir / lab_name).string());
        list.push_back({{"image", img_name}, {"labels", lab_name}});
    }
    files[name] = list;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }
    const fs::path dir(out_dir);
    if (!fs::is_directory(dir)) {
        std::cerr << "output directory does not exist: " << out_dir << "\n";
        return kExitIo;
    }
    try {
        const DatasetSplits data = build_benchmark(cfg);

        json manifest;
        manifest["height"] = cfg.dataset.height;
        manifest["width"] = cfg.dataset.width;
        manifest["num_classes"] = data.num_classes;
        manifest["data_seed"] = cfg.data_seed;
        manifest["labeled_indices"] = data.labeled_indices;
        manifest["noise"] = {{"mode", cfg.noise_mode == NoiseMode::BoundaryMorph
                                          ? "boundary-morph"
                                          : "random-flip"},
                             {"rate", cfg.noise_rate},
                             {"achieved_fraction", data.achieved_noise_fraction}};
        json files;
        write_split(data.train, "train", dir, files);
        write_split(data.val, "val", dir, files);
        write_split(data.test, "test", dir, files);
        json clean = json::array();
        for (size_t i = 0; i < data.clean_labels.size(); ++i) {
            const auto name = sample_name("clean", static_cast<int>(i), "lmap");
            write_lmap(data.clean_labels[i], (dir / name).string());
            clean.push_back(name);
        }
        files["clean"] = clean;
        manifest["files"] = files;

        std::ofstream mf(dir / "manifest.json");
        mf << manifest.dump(2) << "\n";
        if (!mf) throw std::runtime_error("manifest write failed");
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}

DatasetSplits load_dataset_dir(const std::string& data_dir, const RunConfig& cfg) {
    const fs::path dir(data_dir);
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("cannot open manifest in " + data_dir);
    json manifest = json::parse(mf);

    DatasetSplits data;
    data.num_classes = manifest.at("num_classes").get<int>();
    data.labeled_indices = manifest.at("labeled_indices").get<std::vector<size_t>>();
    auto load_split = [&](const char* name, std::vector<Sample>& out) {
        for (const auto& entry : manifest.at("files").at(name)) {
            Sample s;
            s.image = read_img((dir / entry.at("image").get<std::string>()).string());
            s.labels = read_lmap((dir / entry.at("labels").get<std::string>()).string());
            out.push_back(std::move(s));
        }
    };
    load_split("train", data.train);
    load_split("val", data.val);
    load_split("test", data.test);
    for (const auto& name : manifest.at("files").at("clean"))
        data.clean_labels.push_back(read_lmap((dir / name.get<std::string>()).string()));
    data.achieved_noise_fraction = manifest.at("noise").at("achieved_fraction").get<double>();

    std::vector<bool> labeled(data.train.size(), false);
    for (size_t idx : data.labeled_indices) labeled.at(idx) = true;
    for (size_t i = 0; i < data.train.size(); ++i)
        if (!labeled[i]) data.unlabeled_indices.push_back(i);
    (void)cfg;
    return data;
}

int cmd_train(const std::string& config_path, const std::string& data_dir) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }
    try {
        const DatasetSplits data =
            data_dir.empty() ? build_benchmark(cfg) : load_dataset_dir(data_dir, cfg);

        const fs::path out(cfg.output_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        std::ofstream csv(out / "metrics.csv", std::ios::binary);
        if (!csv) {
            std::cerr << "cannot open metrics.csv under " << cfg.output_dir << "\n";
            return kExitIo;
        }

        const TrainResult result = train(cfg, data, &csv);
        save_checkpoint(result.state.model_a, (out / "final.tsnw").string());
        if (result.state.model_b)
            save_checkpoint(*result.state.model_b, (out / "final_b.tsnw").string());

        std::ofstream rc(out / "config.json");
        rc << serialize_config(cfg) << "\n";
    } catch (const std::runtime_error& e) {
        std::cerr << e.what() << "\n";
        return std::string(e.what()).find("non-finite") != std::string::npos ? kExitNumeric
                                                                             : kExitIo;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             const std::string& data_dir, const std::string& out_path, bool identity) {
    try {
        RunConfig cfg = load_config(config_path);
        const DatasetSplits data =
            data_dir.empty() ? build_benchmark(cfg) : load_dataset_dir(data_dir, cfg);

        TinySegNet net;
        if (!identity) {
            try {
                net = load_checkpoint(checkpoint);
            } catch (const std::exception& e) {
                std::cerr << e.what() << "\n";
                return kExitIo;
            }
            if (net.num_classes != data.num_classes) {
                std::cerr << "checkpoint class count " << net.num_classes
                          << " does not match dataset " << data.num_classes << "\n";
                return kExitBadInput;
            }
        }

        std::vector<EvalReport> reports;
        std::ofstream csv(out_path + ".csv", std::ios::binary);
        if (!csv) {
            std::cerr << "cannot open " << out_path << ".csv\n";
            return kExitIo;
        }
        csv << "image,mean_dsc,mean_jaccard,mean_hd95\n";
        for (size_t i = 0; i < data.test.size(); ++i) {
            const LabelMap pred =
                identity ? data.test[i].labels : predict(net, data.test[i].image);
            EvalReport rep = evaluate(pred, data.test[i].labels, data.num_classes);
            csv << i << ',' << format_number(rep.mean_dsc_pct) << ','
                << format_number(rep.mean_jaccard_pct) << ','
                << (rep.mean_hd95_px ? format_number(*rep.mean_hd95_px) : "undefined") << '\n';
            reports.push_back(std::move(rep));
        }
        const EvalReport agg = aggregate(reports);

        json summary;
        summary["mean_dsc"] = agg.mean_dsc_pct;
        summary["mean_jaccard"] = agg.mean_jaccard_pct;
        if (agg.mean_hd95_px) summary["mean_hd95"] = *agg.mean_hd95_px;
        summary["undefined_hd95_count"] = agg.undefined_hd95_count;
        json per_class = json::array();
        for (const auto& m : agg.per_class) {
            json c = {{"dsc", m.dsc_pct}, {"jaccard", m.jaccard_pct}};
            if (m.hd95_px) c["hd95"] = *m.hd95_px;
            per_class.push_back(c);
        }
        summary["per_class"] = per_class;
        std::ofstream js(out_path + ".json");
        js << summary.dump(2) << "\n";
        if (!js) return kExitIo;
        std::cout << "mean DSC " << format_number(agg.mean_dsc_pct) << "\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }
    return 0;
}

int cmd_partition(const std::string& pmap_path, const std::string& lmap_path,
                  const std::string& gamma_csv, const std::string& qmap_out,
                  const std::string& pgm_out) {
    ProbMap ref;
    LabelMap other;
    try {
        ref = read_pmap(pmap_path);
        validate(ref);
        other = read_lmap(lmap_path);
        validate(other, ref.num_classes);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }

    ThresholdTracker tracker(ref.num_classes);
    if (!gamma_csv.empty()) {
        tracker.gamma.clear();
        std::stringstream ss(gamma_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) tracker.gamma.push_back(std::stod(tok));
    }
    RegionMap regions;
    try {
        regions = quadripartition(ref, other, tracker);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadInput;
    }
    try {
        if (!qmap_out.empty()) write_qmap(regions, qmap_out);
        if (!pgm_out.empty()) write_region_pgm(regions, pgm_out);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
    }
    const auto sizes = region_sizes(regions);
    std::printf("UC %zu US %zu DC %zu DS %zu\n", sizes[0], sizes[1], sizes[2], sizes[3]);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MetaSSL heterogeneous-loss training toolkit"};
    app.require_subcommand(1);

    double beta = 3.0, delta = 0.5;
    std::string ordering = "unlabeled", function = "generalized-gaussian";
    auto* w = app.add_subcommand("weights", "print a four-region weight schedule");
    w->add_option("--beta", beta);
    w->add_option("--delta", delta);
    w->add_option("--ordering", ordering)->check(CLI::IsMember({"unlabeled", "labeled"}));
    w->add_option("--function", function);

    std::string config_path, out_dir, data_dir, checkpoint, out_path;
    auto* sy = app.add_subcommand("synth", "generate the synthetic benchmark to disk");
    sy->add_option("--config", config_path)->required();
    sy->add_option("--out", out_dir)->required();

    auto* tr = app.add_subcommand("train", "train the configured backbone");
    tr->add_option("--config", config_path)->required();
    tr->add_option("--data", data_dir);

    bool identity = false;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    ev->add_option("--checkpoint", checkpoint);
    ev->add_option("--config", config_path)->required();
    ev->add_option("--data", data_dir);
    ev->add_option("--out", out_path)->required();
    ev->add_flag("--identity", identity, "score ground truth against itself");

    std::string pmap_path, lmap_path, gamma_csv, qmap_out, pgm_out;
    auto* pa = app.add_subcommand("partition", "quadripartition a reference prediction");
    pa->add_option("--ref", pmap_path)->required();
    pa->add_option("--other", lmap_path)->required();
    pa->add_option("--gamma", gamma_csv);
    pa->add_option("--qmap", qmap_out);
    pa->add_option("--pgm", pgm_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    if (w->parsed()) return cmd_weights(beta, delta, ordering, function);
    if (sy->parsed()) return cmd_synth(config_path, out_dir);
    if (tr->parsed()) return cmd_train(config_path, data_dir);
    if (ev->parsed()) return cmd_eval(checkpoint, config_path, data_dir, out_path, identity);
    if (pa->parsed()) return cmd_partition(pmap_path, lmap_path, gamma_csv, qmap_out, pgm_out);
    return kExitBadInput;
}
