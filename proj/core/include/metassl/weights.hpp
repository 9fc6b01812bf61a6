#pragma once

#include <array>

#include "metassl/grid.hpp"

namespace metassl {

enum class DecayKind {
    GeneralizedGaussian,  // e^{-u^beta}
    Linear,               // 1 - u/2, clamped at 0
    Reciprocal,           // 1/(u+1)
    Cosine,               // 0.5*cos(u) + 0.5
};

struct DecayFunction {
    DecayKind kind = DecayKind::GeneralizedGaussian;
    double beta = 3.0;  // generalized-gaussian exponent, >= 1
};

// Which region gets the smallest weight differs between the two uses:
// unlabeled ordering is w_UC > w_US > w_DC > w_DS, labeled ordering is
// w_UC > w_US > w_DS > w_DC (a confident discrepant reference flags the
// annotation itself as suspect).
enum class Ordering { Unlabeled, Labeled };

struct WeightSchedule {
    double delta = 0.0;
    Ordering ordering = Ordering::Unlabeled;
    std::array<double, 4> w{};  // indexed by Region code

    double weight(Region r) const { return w[static_cast<size_t>(r)]; }
};

// Monotone decreasing generator on [0, 2], phi(0) = 1 for every variant.
// Throws if u is outside [0, 2].
double phi(double u, const DecayFunction& f);

// Samples phi at 0, delta, 2*delta, 3*delta and assigns per the ordering.
// Requires delta > 0 and 3*delta <= 2, which keeps every variant strictly
// decreasing across the four samples (the linear clamp only binds at u = 2).
WeightSchedule make_schedule(const DecayFunction& f, double delta, Ordering ordering);

// Uniform schedule (all four weights 1) for the homogeneous baselines.
WeightSchedule uniform_schedule(Ordering ordering);

// Time-dependent Gaussian warm-up: scale * e^{-sharpness*(1 - t/t_max)^2}.
// t past t_max clamps to t_max.
double lambda_warmup(int t, int t_max, double scale = 0.1, double sharpness = 5.0);

}  // namespace metassl
