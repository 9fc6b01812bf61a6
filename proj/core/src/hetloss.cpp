#include "metassl/hetloss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metassl {

namespace {
void check_shape(const ProbMap& p, const RegionMap& regions) {
    if (p.height != regions.height || p.width != regions.width)
        throw std::invalid_argument("het loss: shape mismatch");
}

double normalizer(const RegionMap& regions, const WeightSchedule& w) {
    const auto sizes = region_sizes(regions);
    double z = 0.0;
    for (size_t t = 0; t < 4; ++t) z += w.w[t] * static_cast<double>(sizes[t]);
    return z;
}
}  // namespace

LossOutput het_ce(const ProbMap& p, const LabelMap& target, const RegionMap& regions,
                  const WeightSchedule& w) {
    check_shape(p, regions);
    if (p.height != target.height || p.width != target.width)
        throw std::invalid_argument("het_ce: shape mismatch");

    const double Z = normalizer(regions, w);
    if (Z <= 0.0) throw std::invalid_argument("het_ce: normalization factor is zero");

    const int C = p.num_classes;
    const size_t n = p.pixels();
    LossOutput out;
    out.grad.assign(p.data.size(), 0.0f);

    double sum = 0.0;
    for (size_t px = 0; px < n; ++px) {
        const double wx = w.w[static_cast<size_t>(regions.data[px])];
        if (wx == 0.0) continue;  // zero-weight regions contribute nothing
        const int tc = target.data[px];
        const float* pv = &p.data[px * C];
        const double pt = std::max(static_cast<double>(pv[tc]), 1e-12);
        sum += wx * std::log(pt);
        const float scale = static_cast<float>(wx / Z);
        float* g = &out.grad[px * C];
        for (int c = 0; c < C; ++c) g[c] = scale * pv[c];
        g[tc] -= scale;
    }
    out.value = -sum / Z;
    return out;
}

LossOutput het_dice(const ProbMap& p, const ProbMap& target_onehot, const RegionMap& regions,
                    const WeightSchedule& w, double eps) {
    check_shape(p, regions);
    if (p.height != target_onehot.height || p.width != target_onehot.width ||
        p.num_classes != target_onehot.num_classes)
        throw std::invalid_argument("het_dice: shape mismatch");
    if (p.pixels() == 0) throw std::invalid_argument("het_dice: empty input");

    const int C = p.num_classes;
    const size_t n = p.pixels();

    // normalize by the largest weight so uniform scaling of the schedule
    // cancels exactly instead of only up to the eps smoothing terms
    const double wmax = *std::max_element(w.w.begin(), w.w.end());
    if (wmax <= 0.0) throw std::invalid_argument("het_dice: all weights are zero");

    std::vector<double> num(C, eps), den(C, eps);
    for (size_t px = 0; px < n; ++px) {
        const double wx = w.w[static_cast<size_t>(regions.data[px])] / wmax;
        const float* pv = &p.data[px * C];
        const float* yv = &target_onehot.data[px * C];
        for (int c = 0; c < C; ++c) {
            num[c] += wx * 2.0 * yv[c] * pv[c];
            den[c] += wx * (static_cast<double>(yv[c]) + pv[c]);
        }
    }

    LossOutput out;
    out.grad.assign(p.data.size(), 0.0f);
    double mean_dice = 0.0;
    for (int c = 0; c < C; ++c) mean_dice += num[c] / den[c];
    out.value = 1.0 - mean_dice / C;

    // quotient rule: d(N/D)/dp = (2*w*y*D - N*w) / D^2
    for (size_t px = 0; px < n; ++px) {
        const double wx = w.w[static_cast<size_t>(regions.data[px])] / wmax;
        const float* yv = &target_onehot.data[px * C];
        float* g = &out.grad[px * C];
        for (int c = 0; c < C; ++c) {
            const double d = den[c];
            g[c] = static_cast<float>(-(2.0 * wx * yv[c] * d - num[c] * wx) / (d * d * C));
        }
    }
    return out;
}

LossOutput het_mse(const ProbMap& p, const ProbMap& ref, const RegionMap& regions,
                   const WeightSchedule& w) {
    check_shape(p, regions);
    if (p.height != ref.height || p.width != ref.width || p.num_classes != ref.num_classes)
        throw std::invalid_argument("het_mse: shape mismatch");

    const double Z = normalizer(regions, w);
    if (Z <= 0.0) throw std::invalid_argument("het_mse: normalization factor is zero");

    const int C = p.num_classes;
    const size_t n = p.pixels();
    LossOutput out;
    out.grad.assign(p.data.size(), 0.0f);

    double sum = 0.0;
    for (size_t px = 0; px < n; ++px) {
        const double wx = w.w[static_cast<size_t>(regions.data[px])];
        if (wx == 0.0) continue;
        const float* pv = &p.data[px * C];
        const float* rv = &ref.data[px * C];
        const float scale = static_cast<float>(2.0 * wx / Z);
        float* g = &out.grad[px * C];
        for (int c = 0; c < C; ++c) {
            const double d = static_cast<double>(pv[c]) - rv[c];
            sum += wx * d * d;
            g[c] = scale * static_cast<float>(d);
        }
    }
    out.value = sum / Z;
    return out;
}

}  // namespace metassl
