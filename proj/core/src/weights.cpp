#include "metassl/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace metassl {

double phi(double u, const DecayFunction& f) {
    if (u < 0.0 || u > 2.0) throw std::invalid_argument("phi: u must lie in [0, 2]");
    switch (f.kind) {
        case DecayKind::GeneralizedGaussian:
            if (f.beta < 1.0) throw std::invalid_argument("phi: beta must be >= 1");
            return std::exp(-std::pow(u, f.beta));
        case DecayKind::Linear:
            return std::max(0.0, 1.0 - u / 2.0);
        case DecayKind::Reciprocal:
            return 1.0 / (u + 1.0);
        case DecayKind::Cosine:
            return 0.5 * std::cos(u) + 0.5;
    }
    throw std::logic_error("phi: unknown decay kind");
}

WeightSchedule make_schedule(const DecayFunction& f, double delta, Ordering ordering) {
    if (delta <= 0.0) throw std::invalid_argument("make_schedule: delta must be > 0");
    if (3.0 * delta > 2.0) throw std::invalid_argument("make_schedule: 3*delta must be <= 2");

    const double v0 = phi(0.0, f);
    const double v1 = phi(delta, f);
    const double v2 = phi(2.0 * delta, f);
    const double v3 = phi(3.0 * delta, f);

    WeightSchedule s;
    s.delta = delta;
    s.ordering = ordering;
    s.w[static_cast<size_t>(Region::UC)] = v0;
    s.w[static_cast<size_t>(Region::US)] = v1;
    if (ordering == Ordering::Unlabeled) {
        s.w[static_cast<size_t>(Region::DC)] = v2;
        s.w[static_cast<size_t>(Region::DS)] = v3;
    } else {
        s.w[static_cast<size_t>(Region::DS)] = v2;
        s.w[static_cast<size_t>(Region::DC)] = v3;
    }
    return s;
}

WeightSchedule uniform_schedule(Ordering ordering) {
    WeightSchedule s;
    s.delta = 0.0;
    s.ordering = ordering;
    s.w = {1.0, 1.0, 1.0, 1.0};
    return s;
}

double lambda_warmup(int t, int t_max, double scale, double sharpness) {
    if (t_max < 1) throw std::invalid_argument("lambda_warmup: t_max must be >= 1");
    if (t < 0) throw std::invalid_argument("lambda_warmup: t must be >= 0");
    if (t > t_max) t = t_max;
    const double r = 1.0 - static_cast<double>(t) / t_max;
    return scale * std::exp(-sharpness * r * r);
}

}  // namespace metassl
