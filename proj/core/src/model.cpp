#include "metassl/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace metassl {

namespace {
uint64_t cache_stamp(const TinySegNet& net) {
    // cheap staleness check: parameter count plus a couple of weight bits
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint32_t v) { h = (h ^ v) * 1099511628211ull; };
    mix(static_cast<uint32_t>(net.param_count()));
    if (!net.conv1_w.empty()) {
        uint32_t bits;
        std::memcpy(&bits, &net.conv1_w[0], 4);
        mix(bits);
        std::memcpy(&bits, &net.conv1_w[net.conv1_w.size() - 1], 4);
        mix(bits);
    }
    if (!net.conv2_w.empty()) {
        uint32_t bits;
        std::memcpy(&bits, &net.conv2_w[0], 4);
        mix(bits);
    }
    return h;
}
}  // namespace

TinySegNet init_net(uint64_t seed, int in_channels, int hidden_width, int num_classes) {
    if (hidden_width < 1 || num_classes < 2 || in_channels < 1)
        throw std::invalid_argument("init_net: bad architecture");

    TinySegNet net;
    net.in_channels = in_channels;
    net.hidden_width = hidden_width;
    net.num_classes = num_classes;
    net.conv1_w.resize(static_cast<size_t>(hidden_width) * in_channels * 9);
    net.conv1_b.assign(hidden_width, 0.0f);
    net.conv2_w.resize(static_cast<size_t>(num_classes) * hidden_width);
    net.conv2_b.assign(num_classes, 0.0f);

    std::mt19937_64 rng(seed);
    const float a1 = std::sqrt(6.0f / (in_channels * 9 + hidden_width * 9));
    std::uniform_real_distribution<float> d1(-a1, a1);
    for (float& w : net.conv1_w) w = d1(rng);
    const float a2 = std::sqrt(6.0f / (hidden_width + num_classes));
    std::uniform_real_distribution<float> d2(-a2, a2);
    for (float& w : net.conv2_w) w = d2(rng);
    return net;
}

std::pair<LogitMap, ForwardCache> forward(const TinySegNet& net, const Image& image,
                                          const std::optional<DropoutSpec>& dropout) {
    if (image.channels != net.in_channels)
        throw std::invalid_argument("forward: channel count mismatch");

    const int H = image.height, W = image.width;
    const int F = net.hidden_width, C = net.num_classes, IC = net.in_channels;
    const size_t n = static_cast<size_t>(H) * W;

    ForwardCache cache;
    cache.input = image;
    cache.pre_act.assign(n * F, 0.0f);
    cache.hidden.assign(n * F, 0.0f);
    cache.pass_id = cache_stamp(net);

    // conv1, 3x3 same padding, via a per-pixel patch buffer
    std::vector<float> patch(static_cast<size_t>(IC) * 9);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            int k = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    const bool in = (rr >= 0 && rr < H && cc >= 0 && cc < W);
                    for (int ic = 0; ic < IC; ++ic)
                        patch[static_cast<size_t>(k) * IC + ic] =
                            in ? image.at(rr, cc, ic) : 0.0f;
                    ++k;
                }
            }
            float* pre = &cache.pre_act[(static_cast<size_t>(r) * W + c) * F];
            const size_t plen = patch.size();
            for (int f = 0; f < F; ++f) {
                const float* w = &net.conv1_w[static_cast<size_t>(f) * plen];
                float acc = net.conv1_b[f];
                for (size_t i = 0; i < plen; ++i) acc += w[i] * patch[i];
                pre[f] = acc;
            }
        }
    }

    // relu + optional inverted dropout
    const bool use_drop = dropout && dropout->rate > 0.0f;
    if (use_drop) {
        if (dropout->rate >= 1.0f) throw std::invalid_argument("forward: dropout rate >= 1");
        cache.drop_mask.assign(n * F, 0.0f);
        std::mt19937_64 rng(dropout->seed);
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        const float keep_scale = 1.0f / (1.0f - dropout->rate);
        for (size_t i = 0; i < n * F; ++i) {
            const float m = (u(rng) >= dropout->rate) ? keep_scale : 0.0f;
            cache.drop_mask[i] = m;
            cache.hidden[i] = (cache.pre_act[i] > 0.0f ? cache.pre_act[i] : 0.0f) * m;
        }
    } else {
        for (size_t i = 0; i < n * F; ++i)
            cache.hidden[i] = cache.pre_act[i] > 0.0f ? cache.pre_act[i] : 0.0f;
    }

    // conv2, 1x1
    LogitMap logits(H, W, C);
    for (size_t px = 0; px < n; ++px) {
        const float* h = &cache.hidden[px * F];
        float* z = &logits.data[px * C];
        for (int k = 0; k < C; ++k) {
            const float* w = &net.conv2_w[static_cast<size_t>(k) * F];
            float acc = net.conv2_b[k];
            for (int f = 0; f < F; ++f) acc += w[f] * h[f];
            z[k] = acc;
        }
    }
    return {std::move(logits), std::move(cache)};
}

LogitMap forward_logits(const TinySegNet& net, const Image& image) {
    return forward(net, image).first;
}

NetGradients zero_gradients(const TinySegNet& net) {
    NetGradients g;
    g.conv1_w.assign(net.conv1_w.size(), 0.0f);
    g.conv1_b.assign(net.conv1_b.size(), 0.0f);
    g.conv2_w.assign(net.conv2_w.size(), 0.0f);
    g.conv2_b.assign(net.conv2_b.size(), 0.0f);
    return g;
}

NetGradients backward(const TinySegNet& net, const ForwardCache& cache,
                      const std::vector<float>& d_logits) {
    if (cache.pass_id != cache_stamp(net))
        throw std::invalid_argument("backward: cache does not match network state");

    const int H = cache.input.height, W = cache.input.width;
    const int F = net.hidden_width, C = net.num_classes, IC = net.in_channels;
    const size_t n = static_cast<size_t>(H) * W;
    if (d_logits.size() != n * C)
        throw std::invalid_argument("backward: upstream gradient size mismatch");

    NetGradients g = zero_gradients(net);

    // through conv2
    std::vector<float> d_hidden(n * F, 0.0f);
    for (size_t px = 0; px < n; ++px) {
        const float* dz = &d_logits[px * C];
        const float* h = &cache.hidden[px * F];
        float* dh = &d_hidden[px * F];
        for (int k = 0; k < C; ++k) {
            const float d = dz[k];
            if (d == 0.0f) continue;
            const float* w = &net.conv2_w[static_cast<size_t>(k) * F];
            float* gw = &g.conv2_w[static_cast<size_t>(k) * F];
            for (int f = 0; f < F; ++f) {
                dh[f] += d * w[f];
                gw[f] += d * h[f];
            }
            g.conv2_b[k] += d;
        }
    }

    // through dropout mask and relu gate
    const bool has_mask = !cache.drop_mask.empty();
    for (size_t i = 0; i < n * F; ++i) {
        float d = d_hidden[i];
        if (has_mask) d *= cache.drop_mask[i];
        d_hidden[i] = cache.pre_act[i] > 0.0f ? d : 0.0f;
    }

    // through conv1
    const size_t plen = static_cast<size_t>(IC) * 9;
    std::vector<float> patch(plen);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            int k = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    const bool in = (rr >= 0 && rr < H && cc >= 0 && cc < W);
                    for (int ic = 0; ic < IC; ++ic)
                        patch[static_cast<size_t>(k) * IC + ic] =
                            in ? cache.input.at(rr, cc, ic) : 0.0f;
                    ++k;
                }
            }
            const float* dp = &d_hidden[(static_cast<size_t>(r) * W + c) * F];
            for (int f = 0; f < F; ++f) {
                const float d = dp[f];
                if (d == 0.0f) continue;
                float* gw = &g.conv1_w[static_cast<size_t>(f) * plen];
                for (size_t i = 0; i < plen; ++i) gw[i] += d * patch[i];
                g.conv1_b[f] += d;
            }
        }
    }
    return g;
}

void accumulate(NetGradients& acc, const NetGradients& g) {
    auto add = [](std::vector<float>& a, const std::vector<float>& b) {
        for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(acc.conv1_w, g.conv1_w);
    add(acc.conv1_b, g.conv1_b);
    add(acc.conv2_w, g.conv2_w);
    add(acc.conv2_b, g.conv2_b);
}

void scale(NetGradients& g, float k) {
    for (auto* v : {&g.conv1_w, &g.conv1_b, &g.conv2_w, &g.conv2_b})
        for (float& x : *v) x *= k;
}

void sgd_step(TinySegNet& net, const NetGradients& grads, float lr) {
    if (lr <= 0.0f) throw std::invalid_argument("sgd_step: lr must be > 0");
    auto apply = [lr](std::vector<float>& p, const std::vector<float>& g) {
        if (p.size() != g.size()) throw std::invalid_argument("sgd_step: gradient shape mismatch");
        for (size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i])) throw std::runtime_error("sgd_step: non-finite gradient");
            p[i] -= lr * g[i];
        }
    };
    apply(net.conv1_w, grads.conv1_w);
    apply(net.conv1_b, grads.conv1_b);
    apply(net.conv2_w, grads.conv2_w);
    apply(net.conv2_b, grads.conv2_b);
}

void ema_update(TinySegNet& teacher, const TinySegNet& student, double momentum) {
    if (momentum < 0.0 || momentum > 1.0)
        throw std::invalid_argument("ema_update: momentum must lie in [0,1]");
    if (teacher.in_channels != student.in_channels ||
        teacher.hidden_width != student.hidden_width ||
        teacher.num_classes != student.num_classes)
        throw std::invalid_argument("ema_update: architecture mismatch");

    const float m = static_cast<float>(momentum);
    auto blend = [m](std::vector<float>& t, const std::vector<float>& s) {
        for (size_t i = 0; i < t.size(); ++i) t[i] = m * t[i] + (1.0f - m) * s[i];
    };
    blend(teacher.conv1_w, student.conv1_w);
    blend(teacher.conv1_b, student.conv1_b);
    blend(teacher.conv2_w, student.conv2_w);
    blend(teacher.conv2_b, student.conv2_b);
}

double poly_lr(double lr0, int t, int t_max, double power) {
    if (t > t_max) t = t_max;
    const double frac = 1.0 - static_cast<double>(t) / t_max;
    const double lr = lr0 * std::pow(frac, power);
    return std::max(lr, lr0 * 1e-3);
}

void save_checkpoint(const TinySegNet& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f.write("TSNW", 4);
    const uint32_t dims[3] = {static_cast<uint32_t>(net.in_channels),
                              static_cast<uint32_t>(net.hidden_width),
                              static_cast<uint32_t>(net.num_classes)};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (const auto* v : {&net.conv1_w, &net.conv1_b, &net.conv2_w, &net.conv2_b})
        f.write(reinterpret_cast<const char*>(v->data()),
                static_cast<std::streamsize>(v->size() * sizeof(float)));
    if (!f) throw std::runtime_error("save_checkpoint: write failed");
}

TinySegNet load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "TSNW", 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic");
    uint32_t dims[3];
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!f) throw std::runtime_error("load_checkpoint: truncated header");

    TinySegNet net;
    net.in_channels = static_cast<int>(dims[0]);
    net.hidden_width = static_cast<int>(dims[1]);
    net.num_classes = static_cast<int>(dims[2]);
    net.conv1_w.resize(static_cast<size_t>(net.hidden_width) * net.in_channels * 9);
    net.conv1_b.resize(net.hidden_width);
    net.conv2_w.resize(static_cast<size_t>(net.num_classes) * net.hidden_width);
    net.conv2_b.resize(net.num_classes);
    for (auto* v : {&net.conv1_w, &net.conv1_b, &net.conv2_w, &net.conv2_b}) {
        f.read(reinterpret_cast<char*>(v->data()),
               static_cast<std::streamsize>(v->size() * sizeof(float)));
        if (!f) throw std::runtime_error("load_checkpoint: truncated payload");
    }
    return net;
}

}  // namespace metassl
