#include "metassl/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace metassl {

ProbMap softmax(const LogitMap& logits) {
    const int C = logits.num_classes;
    ProbMap out(logits.height, logits.width, C);
    const size_t n = logits.pixels();
    for (size_t px = 0; px < n; ++px) {
        const float* z = &logits.data[px * C];
        float* p = &out.data[px * C];
        float zmax = z[0];
        for (int c = 0; c < C; ++c) {
            if (!std::isfinite(z[c])) throw std::invalid_argument("softmax: non-finite logit");
            if (z[c] > zmax) zmax = z[c];
        }
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            double e = std::exp(static_cast<double>(z[c]) - zmax);
            p[c] = static_cast<float>(e);
            sum += e;
        }
        const float inv = static_cast<float>(1.0 / sum);
        for (int c = 0; c < C; ++c) p[c] *= inv;
    }
    return out;
}

namespace {
template <typename MapT>
LabelMap argmax_impl(const MapT& m, int C) {
    LabelMap out(m.height, m.width);
    const size_t n = m.pixels();
    for (size_t px = 0; px < n; ++px) {
        const float* v = &m.data[px * C];
        int best = 0;
        for (int c = 1; c < C; ++c)
            if (v[c] > v[best]) best = c;
        out.data[px] = static_cast<uint16_t>(best);
    }
    return out;
}
}  // namespace

LabelMap argmax(const ProbMap& p) { return argmax_impl(p, p.num_classes); }
LabelMap argmax(const LogitMap& logits) { return argmax_impl(logits, logits.num_classes); }

Plane max_prob(const ProbMap& p) {
    const int C = p.num_classes;
    Plane out(p.height, p.width);
    const size_t n = p.pixels();
    for (size_t px = 0; px < n; ++px) {
        const float* v = &p.data[px * C];
        float best = v[0];
        for (int c = 1; c < C; ++c)
            if (v[c] > best) best = v[c];
        out.data[px] = best;
    }
    return out;
}

ProbMap one_hot(const LabelMap& y, int num_classes) {
    ProbMap out(y.height, y.width, num_classes, 0.0f);
    const size_t n = y.pixels();
    for (size_t px = 0; px < n; ++px) {
        if (y.data[px] >= num_classes)
            throw std::invalid_argument("one_hot: label index out of range");
        out.data[px * num_classes + y.data[px]] = 1.0f;
    }
    return out;
}

void softmax_backward_pixel(const float* p, const float* grad_p, float* grad_logits,
                            int num_classes) {
    double dot = 0.0;
    for (int c = 0; c < num_classes; ++c)
        dot += static_cast<double>(grad_p[c]) * p[c];
    for (int c = 0; c < num_classes; ++c)
        grad_logits[c] += p[c] * (grad_p[c] - static_cast<float>(dot));
}

void validate(const ProbMap& p, float tol) {
    const int C = p.num_classes;
    if (C < 2) throw std::invalid_argument("ProbMap: num_classes must be >= 2");
    const size_t n = p.pixels();
    for (size_t px = 0; px < n; ++px) {
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            float v = p.data[px * C + c];
            if (!(v >= 0.0f && v <= 1.0f))
                throw std::invalid_argument("ProbMap: entry outside [0,1]");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > tol)
            throw std::invalid_argument("ProbMap: pixel probabilities do not sum to 1");
    }
}

void validate(const LabelMap& y, int num_classes) {
    for (uint16_t v : y.data)
        if (v >= num_classes)
            throw std::invalid_argument("LabelMap: index out of range");
}

}  // namespace metassl
