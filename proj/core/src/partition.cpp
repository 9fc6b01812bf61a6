#include "metassl/partition.hpp"

#include <stdexcept>

namespace metassl {

namespace {
void accumulate_conf(const ProbMap& p, std::vector<double>& sums, std::vector<size_t>& counts) {
    const int C = p.num_classes;
    const size_t n = p.pixels();
    for (size_t px = 0; px < n; ++px) {
        const float* v = &p.data[px * C];
        int best = 0;
        for (int c = 1; c < C; ++c)
            if (v[c] > v[best]) best = c;
        sums[best] += v[best];
        counts[best] += 1;
    }
}

ClassConfidence finish_conf(const std::vector<double>& sums, const std::vector<size_t>& counts) {
    const size_t C = sums.size();
    ClassConfidence out;
    out.values.assign(C, 0.0);
    out.valid.assign(C, false);
    for (size_t c = 0; c < C; ++c) {
        if (counts[c] > 0) {
            out.values[c] = sums[c] / static_cast<double>(counts[c]);
            out.valid[c] = true;
        }
    }
    return out;
}
}  // namespace

ClassConfidence class_mean_conf(const ProbMap& p) {
    std::vector<double> sums(p.num_classes, 0.0);
    std::vector<size_t> counts(p.num_classes, 0);
    accumulate_conf(p, sums, counts);
    return finish_conf(sums, counts);
}

ClassConfidence class_mean_conf(const std::vector<const ProbMap*>& maps, int num_classes) {
    std::vector<double> sums(num_classes, 0.0);
    std::vector<size_t> counts(num_classes, 0);
    for (const ProbMap* p : maps) {
        if (p->num_classes != num_classes)
            throw std::invalid_argument("class_mean_conf: class count mismatch");
        accumulate_conf(*p, sums, counts);
    }
    return finish_conf(sums, counts);
}

void update_thresholds(ThresholdTracker& tracker, const ClassConfidence& conf) {
    if (tracker.alpha < 0.0 || tracker.alpha > 1.0)
        throw std::invalid_argument("update_thresholds: alpha must lie in [0,1]");
    if (conf.values.size() != tracker.gamma.size())
        throw std::invalid_argument("update_thresholds: class count mismatch");

    const double a_obs = tracker.alpha_on_observation ? tracker.alpha : 1.0 - tracker.alpha;
    for (size_t c = 0; c < tracker.gamma.size(); ++c) {
        if (!conf.valid[c]) continue;  // empty classes skip their update
        tracker.gamma[c] = a_obs * conf.values[c] + (1.0 - a_obs) * tracker.gamma[c];
    }
    tracker.iteration += 1;
}

RegionMap quadripartition(const ProbMap& ref, const LabelMap& other_labels,
                          const ThresholdTracker& tracker) {
    if (ref.height != other_labels.height || ref.width != other_labels.width)
        throw std::invalid_argument("quadripartition: shape mismatch");
    if (static_cast<int>(tracker.gamma.size()) != ref.num_classes)
        throw std::invalid_argument("quadripartition: tracker class count mismatch");

    const int C = ref.num_classes;
    RegionMap out(ref.height, ref.width);
    const size_t n = ref.pixels();
    for (size_t px = 0; px < n; ++px) {
        const float* v = &ref.data[px * C];
        int best = 0;
        for (int c = 1; c < C; ++c)
            if (v[c] > v[best]) best = c;
        const bool unanimous = (best == other_labels.data[px]);
        const bool confident = (static_cast<double>(v[best]) > tracker.gamma[best]);
        out.data[px] = unanimous ? (confident ? Region::UC : Region::US)
                                 : (confident ? Region::DC : Region::DS);
    }
    return out;
}

std::array<size_t, 4> region_sizes(const RegionMap& r) {
    std::array<size_t, 4> counts{0, 0, 0, 0};
    for (Region code : r.data) counts[static_cast<size_t>(code)] += 1;
    return counts;
}

RegionAccuracy region_accuracy(const RegionMap& r, const LabelMap& pred, const LabelMap& gt) {
    if (r.height != pred.height || r.width != pred.width ||
        r.height != gt.height || r.width != gt.width)
        throw std::invalid_argument("region_accuracy: shape mismatch");

    std::array<size_t, 4> total{0, 0, 0, 0};
    std::array<size_t, 4> correct{0, 0, 0, 0};
    const size_t n = r.pixels();
    for (size_t px = 0; px < n; ++px) {
        const size_t t = static_cast<size_t>(r.data[px]);
        total[t] += 1;
        if (pred.data[px] == gt.data[px]) correct[t] += 1;
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
