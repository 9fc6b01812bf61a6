#include "metassl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace metassl {

namespace {
void check_shapes(const LabelMap& a, const LabelMap& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("metrics: shape mismatch");
}

struct Overlap {
    size_t a = 0, b = 0, inter = 0;
};

Overlap overlap(const LabelMap& pred, const LabelMap& gt, int cls) {
    Overlap o;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const bool in_a = pred.data[i] == cls;
        const bool in_b = gt.data[i] == cls;
        o.a += in_a;
        o.b += in_b;
        o.inter += in_a && in_b;
    }
    return o;
}

// in-mask pixels with a 4-neighbor outside the mask (image border counts as outside)
std::vector<std::pair<int, int>> boundary_pixels(const LabelMap& m, int cls) {
    std::vector<std::pair<int, int>> out;
    const int H = m.height, W = m.width;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            if (m.at(r, c) != cls) continue;
            const bool inner = r > 0 && r < H - 1 && c > 0 && c < W - 1 &&
                               m.at(r - 1, c) == cls && m.at(r + 1, c) == cls &&
                               m.at(r, c - 1) == cls && m.at(r, c + 1) == cls;
            if (!inner) out.emplace_back(r, c);
        }
    }
    return out;
}

void directed_distances(const std::vector<std::pair<int, int>>& from,
                        const std::vector<std::pair<int, int>>& to,
                        std::vector<double>& out) {
    for (const auto& [r, c] : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [tr, tc] : to) {
            const double dr = r - tr, dc = c - tc;
            const double d2 = dr * dr + dc * dc;
            if (d2 < best) best = d2;
        }
        out.push_back(std::sqrt(best));
    }
}
}  // namespace

double dsc(const LabelMap& pred, const LabelMap& gt, int cls) {
    check_shapes(pred, gt);
    const Overlap o = overlap(pred, gt, cls);
    if (o.a + o.b == 0) return 1.0;
    return 2.0 * static_cast<double>(o.inter) / static_cast<double>(o.a + o.b);
}

double jaccard(const LabelMap& pred, const LabelMap& gt, int cls) {
    check_shapes(pred, gt);
    const Overlap o = overlap(pred, gt, cls);
    const size_t uni = o.a + o.b - o.inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(o.inter) / static_cast<double>(uni);
}

std::optional<double> hd95(const LabelMap& pred, const LabelMap& gt, int cls) {
    check_shapes(pred, gt);
    const auto ba = boundary_pixels(pred, cls);
    const auto bb = boundary_pixels(gt, cls);
    if (ba.empty() && bb.empty()) return 0.0;
    if (ba.empty() || bb.empty()) return std::nullopt;

    std::vector<double> dists;
    dists.reserve(ba.size() + bb.size());
    directed_distances(ba, bb, dists);
    directed_distances(bb, ba, dists);
    std::sort(dists.begin(), dists.end());
    // nearest-rank percentile
    const size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(dists.size())));
    return dists[rank == 0 ? 0 : rank - 1];
}

EvalReport evaluate(const LabelMap& pred, const LabelMap& gt, int num_classes) {
    EvalReport rep;
    double dsum = 0.0, jsum = 0.0, hsum = 0.0;
    int hcount = 0;
    for (int c = 1; c < num_classes; ++c) {
        ClassMetrics m;
        m.dsc_pct = 100.0 * dsc(pred, gt, c);
        m.jaccard_pct = 100.0 * jaccard(pred, gt, c);
        m.hd95_px = hd95(pred, gt, c);
        dsum += m.dsc_pct;
        jsum += m.jaccard_pct;
        if (m.hd95_px) {
            hsum += *m.hd95_px;
            ++hcount;
        } else {
            ++rep.undefined_hd95_count;
        }
        rep.per_class.push_back(m);
    }
    const int fg = num_classes - 1;
    rep.mean_dsc_pct = fg > 0 ? dsum / fg : 0.0;
    rep.mean_jaccard_pct = fg > 0 ? jsum / fg : 0.0;
    if (hcount > 0) rep.mean_hd95_px = hsum / hcount;
    return rep;
}

EvalReport aggregate(const std::vector<EvalReport>& reports) {
    EvalReport agg;
    if (reports.empty()) return agg;
    const size_t n_cls = reports.front().per_class.size();
    agg.per_class.resize(n_cls);

    std::vector<double> hsum(n_cls, 0.0);
    std::vector<int> hcount(n_cls, 0);
    for (const EvalReport& r : reports) {
        if (r.per_class.size() != n_cls)
            throw std::invalid_argument("aggregate: class count mismatch");
        for (size_t c = 0; c < n_cls; ++c) {
            agg.per_class[c].dsc_pct += r.per_class[c].dsc_pct;
            agg.per_class[c].jaccard_pct += r.per_class[c].jaccard_pct;
            if (r.per_class[c].hd95_px) {
                hsum[c] += *r.per_class[c].hd95_px;
                ++hcount[c];
            } else {
                ++agg.undefined_hd95_count;
            }
        }
    }

    double dsum = 0.0, jsum = 0.0, htot = 0.0;
    int htotcount = 0;
    for (size_t c = 0; c < n_cls; ++c) {
        agg.per_class[c].dsc_pct /= static_cast<double>(reports.size());
        agg.per_class[c].jaccard_pct /= static_cast<double>(reports.size());
        if (hcount[c] > 0) agg.per_class[c].hd95_px = hsum[c] / hcount[c];
        dsum += agg.per_class[c].dsc_pct;
        jsum += agg.per_class[c].jaccard_pct;
        htot += hsum[c];
        htotcount += hcount[c];
    }
    agg.mean_dsc_pct = dsum / static_cast<double>(n_cls);
    agg.mean_jaccard_pct = jsum / static_cast<double>(n_cls);
    if (htotcount > 0) agg.mean_hd95_px = htot / htotcount;
    return agg;
}

}  // namespace metassl
