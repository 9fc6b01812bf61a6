#include "metassl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "metassl/io.hpp"

namespace metassl {

DatasetSplits build_benchmark(const RunConfig& cfg) {
    SceneSpec scene;
    scene.height = cfg.dataset.height;
    scene.width = cfg.dataset.width;
    scene.num_classes = cfg.dataset.num_classes;
    scene.min_shapes = cfg.dataset.min_shapes;
    scene.max_shapes = cfg.dataset.max_shapes;
    scene.noise_sigma = cfg.dataset.noise_sigma;
    scene.illumination_amplitude = cfg.dataset.illumination;
    if (scene.num_classes > static_cast<int>(scene.class_means.size()))
        throw std::invalid_argument("build_benchmark: num_classes > supported class means");
    scene.class_means.resize(scene.num_classes);

    DatasetSplits out;
    out.num_classes = scene.num_classes;

    scene.seed = derive_seed(cfg.data_seed, 100);
    out.train = generate_dataset(scene, cfg.dataset.n_train);
    scene.seed = derive_seed(cfg.data_seed, 200);
    out.val = generate_dataset(scene, cfg.dataset.n_val);
    scene.seed = derive_seed(cfg.data_seed, 300);
    out.test = generate_dataset(scene, cfg.dataset.n_test);

    out.clean_labels.reserve(out.train.size());
    for (const Sample& s : out.train) out.clean_labels.push_back(s.labels);

    const size_t n = out.train.size();
    size_t n_labeled = static_cast<size_t>(std::lround(cfg.labeled_fraction * n));
    n_labeled = std::clamp<size_t>(n_labeled, 1, n);

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(cfg.data_seed, 400));
    std::shuffle(order.begin(), order.end(), rng);
    out.labeled_indices.assign(order.begin(), order.begin() + n_labeled);
    out.unlabeled_indices.assign(order.begin() + n_labeled, order.end());
    std::sort(out.labeled_indices.begin(), out.labeled_indices.end());
    std::sort(out.unlabeled_indices.begin(), out.unlabeled_indices.end());

    // annotation noise touches only labeled images' labels
    size_t corrupted = 0, labeled_px = 0;
    for (size_t k = 0; k < out.labeled_indices.size(); ++k) {
        const size_t idx = out.labeled_indices[k];
        NoiseSpec ns{cfg.noise_mode, cfg.noise_rate, derive_seed(cfg.data_seed, 500 + idx)};
        LabelMap noisy = inject_label_noise(out.train[idx].labels, out.num_classes, ns);
        for (size_t px = 0; px < noisy.data.size(); ++px)
            corrupted += noisy.data[px] != out.clean_labels[idx].data[px];
        labeled_px += noisy.pixels();
        out.train[idx].labels = std::move(noisy);
    }
    out.achieved_noise_fraction =
        labeled_px > 0 ? static_cast<double>(corrupted) / static_cast<double>(labeled_px) : 0.0;
    return out;
}

LabelMap predict(const TinySegNet& net, const Image& image) {
    return argmax(forward_logits(net, image));
}

double mean_dsc_over(const TinySegNet& net, const std::vector<Sample>& split, int num_classes) {
    if (split.empty()) return 0.0;
    std::vector<EvalReport> reports;
    reports.reserve(split.size());
    for (const Sample& s : split)
        reports.push_back(evaluate(predict(net, s.image), s.labels, num_classes));
    return aggregate(reports).mean_dsc_pct;
}

std::string csv_header(int num_classes) {
    std::ostringstream ss;
    ss << "epoch,sup_loss,unsup_loss,lambda";
    for (int c = 0; c < num_classes; ++c) ss << ",gamma_" << c;
    ss << ",l_uc,l_us,l_dc,l_ds,u_uc,u_us,u_dc,u_ds,val_dsc";
    return ss.str();
}

std::string csv_row(const EpochRow& row) {
    std::ostringstream ss;
    ss << row.epoch << ',' << format_number(row.sup_loss) << ',' << format_number(row.unsup_loss)
       << ',' << format_number(row.lambda);
    for (double g : row.gamma) ss << ',' << format_number(g);
    for (size_t v : row.labeled_regions) ss << ',' << v;
    for (size_t v : row.unlabeled_regions) ss << ',' << v;
    ss << ',' << format_number(row.val_dsc);
    return ss.str();
}

TrainResult train(const RunConfig& cfg, const DatasetSplits& data, std::ostream* csv) {
    TrainResult result;
    result.state = make_state(to_settings(cfg), cfg.seed, 1, cfg.model_width, data.num_classes,
                              cfg.alpha_ema, cfg.alpha_on_observation, cfg.gamma_init);
    TrainState& state = result.state;

    const bool sl = cfg.backbone == BackboneKind::SL;
    const size_t n_l = data.labeled_indices.size();
    const size_t n_u = data.unlabeled_indices.size();
    const size_t bl = std::min<size_t>(cfg.batch_labeled, n_l);
    const size_t bu = sl ? 0 : std::min<size_t>(cfg.batch_unlabeled, std::max<size_t>(n_u, 1));

    size_t iters = cfg.iters_per_epoch;
    if (iters == 0)
        iters = sl || n_u == 0 ? (n_l + bl - 1) / bl : (n_u + bu - 1) / bu;

    if (csv) *csv << csv_header(data.num_classes) << '\n';

    std::vector<size_t> l_order = data.labeled_indices;
    std::vector<size_t> u_order = data.unlabeled_indices;
    size_t l_pos = 0, u_pos = 0;

    for (int epoch = 0; epoch <= cfg.t_max; ++epoch) {
        state.epoch = epoch;
        std::mt19937_64 rng(derive_seed(cfg.seed ^ 0x5ba7c0de, static_cast<uint64_t>(epoch)));
        std::shuffle(l_order.begin(), l_order.end(), rng);
        std::shuffle(u_order.begin(), u_order.end(), rng);
        l_pos = u_pos = 0;

        EpochRow row;
        row.epoch = epoch;
        for (size_t it = 0; it < iters; ++it) {
            Batch batch;
            for (size_t i = 0; i < bl; ++i) {
                const size_t idx = l_order[l_pos];
                l_pos = (l_pos + 1) % l_order.size();
                batch.labeled.push_back({&data.train[idx].image, &data.train[idx].labels});
            }
            for (size_t i = 0; i < bu && !u_order.empty(); ++i) {
                const size_t idx = u_order[u_pos];
                u_pos = (u_pos + 1) % u_order.size();
                batch.unlabeled.push_back(&data.train[idx].image);
            }

            const StepReport rep = step(state, batch);
            if (!std::isfinite(rep.sup_loss) || !std::isfinite(rep.unsup_loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch));
            row.sup_loss += rep.sup_loss / iters;
            row.unsup_loss += rep.unsup_loss / iters;
            row.lambda = rep.lambda;
            row.gamma = rep.gamma;
            for (size_t t = 0; t < 4; ++t) {
                row.labeled_regions[t] += rep.labeled_regions[t];
                row.unlabeled_regions[t] += rep.unlabeled_regions[t];
            }
        }

        if (epoch % cfg.val_every == 0 || epoch == cfg.t_max)
            row.val_dsc = mean_dsc_over(state.model_a, data.val, data.num_classes);
        else
            row.val_dsc = -1.0;

        if (csv) *csv << csv_row(row) << '\n';
        result.rows.push_back(std::move(row));
    }
    return result;
}

RegionAccuracy unlabeled_region_accuracy(const TrainState& state, const DatasetSplits& data) {
    // pool correctness counts across all unlabeled training images
    std::array<size_t, 4> total{}, correct{};
    const TinySegNet& sup_net = state.model_a;
    const TinySegNet& ref_net = state.model_b ? *state.model_b : state.model_a;

    for (size_t idx : data.unlabeled_indices) {
        const Image& img = data.train[idx].image;
        const ProbMap ref = softmax(forward_logits(ref_net, img));
        const LabelMap pred = predict(sup_net, img);
        const RegionMap regions = quadripartition(ref, pred, state.tracker);
        const LabelMap& gt = data.clean_labels[idx];
        for (size_t px = 0; px < regions.data.size(); ++px) {
            const size_t t = static_cast<size_t>(regions.data[px]);
            total[t] += 1;
            correct[t] += pred.data[px] == gt.data[px];
        }
    }

    RegionAccuracy out;
    for (size_t t = 0; t < 4; ++t) {
        out.present[t] = total[t] > 0;
        out.accuracy[t] = out.present[t]
                              ? static_cast<double>(correct[t]) / static_cast<double>(total[t])
                              : 0.0;
    }
    return out;
}

}  // namespace metassl
