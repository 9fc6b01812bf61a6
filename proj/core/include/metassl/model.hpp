#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metassl/grid.hpp"

namespace metassl {

// Inverted-scaling dropout: kept activations are multiplied by 1/(1-rate)
// so the expected activation is unchanged.
struct DropoutSpec {
    float rate = 0.0f;  // in [0, 1)
    uint64_t seed = 0;
};

// Two-layer convolutional pixel classifier with hand-written backprop:
// logits = conv2_1x1(dropout(relu(conv1_3x3(image)))). Same padding, so
// the logit grid matches the input grid.
struct TinySegNet {
    int in_channels = 0;
    int hidden_width = 0;  // F
    int num_classes = 0;   // C

    std::vector<float> conv1_w;  // [F][in][3][3]
    std::vector<float> conv1_b;  // [F]
    std::vector<float> conv2_w;  // [C][F]
    std::vector<float> conv2_b;  // [C]

    size_t param_count() const {
        return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size();
    }
};

// Parameter gradients, mirroring TinySegNet's layout.
struct NetGradients {
    std::vector<float> conv1_w, conv1_b, conv2_w, conv2_b;
};

struct ForwardCache {
    Image input;                  // snapshot
    std::vector<float> pre_act;   // conv1 output before relu, [H][W][F]
    std::vector<float> hidden;    // after relu (+ dropout), [H][W][F]
    std::vector<float> drop_mask; // empty when no dropout, else 0 or 1/(1-rate)
    uint64_t pass_id = 0;
};

// Glorot-uniform initialization; same seed gives bitwise-identical parameters.
TinySegNet init_net(uint64_t seed, int in_channels, int hidden_width, int num_classes);

std::pair<LogitMap, ForwardCache> forward(const TinySegNet& net, const Image& image,
                                          const std::optional<DropoutSpec>& dropout = std::nullopt);

// Convenience inference path that skips cache construction.
LogitMap forward_logits(const TinySegNet& net, const Image& image);

// Exact chain rule through conv2, the dropout mask, the relu gate, and conv1.
// d_logits has the LogitMap layout of the matching forward pass.
NetGradients backward(const TinySegNet& net, const ForwardCache& cache,
                      const std::vector<float>& d_logits);

void accumulate(NetGradients& acc, const NetGradients& g);
void scale(NetGradients& g, float k);
NetGradients zero_gradients(const TinySegNet& net);

// theta <- theta - lr * g. Throws on non-finite gradients.
void sgd_step(TinySegNet& net, const NetGradients& grads, float lr);

// theta_T <- m*theta_T + (1-m)*theta_S.
void ema_update(TinySegNet& teacher, const TinySegNet& student, double momentum);

// Polynomial decay lr(t) = lr0 * (1 - t/t_max)^0.9 (floored just above zero
// at t = t_max so the final epoch still moves).
double poly_lr(double lr0, int t, int t_max, double power = 0.9);

// Flat binary checkpoint: magic "TSNW", dims, float32 little-endian payload.
void save_checkpoint(const TinySegNet& net, const std::string& path);
TinySegNet load_checkpoint(const std::string& path);

}  // namespace metassl
