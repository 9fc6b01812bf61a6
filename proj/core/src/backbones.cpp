#include "metassl/backbones.hpp"

#include <stdexcept>

namespace metassl {

bool is_plain(BackboneKind k) {
    return k == BackboneKind::SL || k == BackboneKind::PlainMT || k == BackboneKind::PlainCPS ||
           k == BackboneKind::PlainFixMatch || k == BackboneKind::PlainRDrop;
}

bool uses_two_models(BackboneKind k) {
    return k == BackboneKind::MT || k == BackboneKind::PlainMT || k == BackboneKind::CPS ||
           k == BackboneKind::PlainCPS;
}

std::string backbone_name(BackboneKind k) {
    switch (k) {
        case BackboneKind::MT: return "mt";
        case BackboneKind::CPS: return "cps";
        case BackboneKind::FixMatch: return "fixmatch";
        case BackboneKind::RDrop: return "rdrop";
        case BackboneKind::SL: return "sl";
        case BackboneKind::PlainMT: return "plain-mt";
        case BackboneKind::PlainCPS: return "plain-cps";
        case BackboneKind::PlainFixMatch: return "plain-fixmatch";
        case BackboneKind::PlainRDrop: return "plain-rdrop";
    }
    return "?";
}

std::optional<BackboneKind> parse_backbone(const std::string& name) {
    for (BackboneKind k : {BackboneKind::MT, BackboneKind::CPS, BackboneKind::FixMatch,
                           BackboneKind::RDrop, BackboneKind::SL, BackboneKind::PlainMT,
                           BackboneKind::PlainCPS, BackboneKind::PlainFixMatch,
                           BackboneKind::PlainRDrop})
        if (backbone_name(k) == name) return k;
    return std::nullopt;
}

TrainState make_state(const TrainSettings& cfg, uint64_t seed, int in_channels,
                      int hidden_width, int num_classes, double alpha_ema,
                      bool alpha_on_observation, double gamma_init) {
    TrainState s;
    s.cfg = cfg;
    s.seed = seed;
    s.model_a = init_net(derive_seed(seed, 1), in_channels, hidden_width, num_classes);
    if (uses_two_models(cfg.kind)) {
        if (cfg.kind == BackboneKind::CPS || cfg.kind == BackboneKind::PlainCPS) {
            // independently initialized second model
            s.model_b = init_net(derive_seed(seed, 2), in_channels, hidden_width, num_classes);
        } else {
            s.model_b = s.model_a;  // MT teacher starts as a copy of the student
        }
    }
    s.tracker = ThresholdTracker(num_classes, alpha_ema, gamma_init);
    s.tracker.alpha_on_observation = alpha_on_observation;
    return s;
}

SupervisedLoss supervised_het_loss(const ProbMap& p, const ProbMap& ref, const LabelMap& ystar,
                                   const ThresholdTracker& tracker, const WeightSchedule& w) {
    SupervisedLoss out;
    out.regions = quadripartition(ref, ystar, tracker);

    LossOutput ce = het_ce(p, ystar, out.regions, w);
    LossOutput dice = het_dice(p, one_hot(ystar, p.num_classes), out.regions, w);

    out.value = ce.value + dice.value;
    out.d_logits = std::move(ce.grad);  // already wrt logits
    const int C = p.num_classes;
    for (size_t px = 0; px < p.pixels(); ++px)
        softmax_backward_pixel(&p.data[px * C], &dice.grad[px * C], &out.d_logits[px * C], C);
    return out;
}

UnsupervisedLoss unsupervised_het_loss(const ProbMap& p, const ProbMap& ref,
                                       const ThresholdTracker& tracker, const WeightSchedule& w,
                                       bool with_dice) {
    UnsupervisedLoss out;
    const LabelMap pseudo = argmax(ref);
    out.regions = quadripartition(ref, argmax(p), tracker);

    LossOutput ce = het_ce(p, pseudo, out.regions, w);
    out.value = ce.value;
    out.d_logits = std::move(ce.grad);
    if (with_dice) {
        LossOutput dice = het_dice(p, one_hot(pseudo, p.num_classes), out.regions, w);
        out.value += dice.value;
        const int C = p.num_classes;
        for (size_t px = 0; px < p.pixels(); ++px)
            softmax_backward_pixel(&p.data[px * C], &dice.grad[px * C], &out.d_logits[px * C], C);
    }
    return out;
}

namespace {

uint64_t stream_seed(const TrainState& s, uint64_t purpose, uint64_t item) {
    return derive_seed(s.seed ^ (purpose * 0xD6E8FEB86659FD93ull),
                       static_cast<uint64_t>(s.step_index) * 4096 + item);
}

void scale_and_sum(std::array<size_t, 4>& acc, const RegionMap& regions) {
    const auto sizes = region_sizes(regions);
    for (size_t t = 0; t < 4; ++t) acc[t] += sizes[t];
}

void update_tracker_from(TrainState& state, const std::vector<const ProbMap*>& refs,
                         const std::vector<const ProbMap*>& sup_preds) {
    std::vector<const ProbMap*> pool = refs;
    if (state.cfg.tracker_all_predictions)
        pool.insert(pool.end(), sup_preds.begin(), sup_preds.end());
    if (pool.empty()) return;
    update_thresholds(state.tracker, class_mean_conf(pool, state.model_a.num_classes));
}

struct ForwardBundle {
    ProbMap probs;
    ForwardCache cache;
};

ForwardBundle run_forward(const TinySegNet& net, const Image& img,
                          const std::optional<DropoutSpec>& drop = std::nullopt) {
    auto [logits, cache] = forward(net, img, drop);
    return {softmax(logits), std::move(cache)};
}

double lr_now(const TrainState& s) {
    return poly_lr(s.cfg.lr0, s.epoch, s.cfg.t_max, s.cfg.lr_power);
}

void finish_report(const TrainState& s, StepReport& rep) {
    rep.lambda = lambda_warmup(s.epoch, s.cfg.t_max, s.cfg.lambda_scale, s.cfg.lambda_sharpness);
    rep.gamma = s.tracker.gamma;
}

StepReport step_mt_like(TrainState& state, const Batch& batch) {
    // covers MT, plain-MT, SL (SL references its own prediction and skips
    // unlabeled data entirely)
    const bool sl = state.cfg.kind == BackboneKind::SL;
    TinySegNet& student = state.model_a;

    std::vector<ForwardBundle> sup_l, sup_u;
    std::vector<ProbMap> ref_l, ref_u;
    for (const auto& ex : batch.labeled) {
        sup_l.push_back(run_forward(student, *ex.image));
        if (!sl) ref_l.push_back(softmax(forward_logits(*state.model_b, *ex.image)));
    }
    if (!sl) {
        for (const Image* img : batch.unlabeled) {
            sup_u.push_back(run_forward(student, *img));
            ref_u.push_back(softmax(forward_logits(*state.model_b, *img)));
        }
    }

    std::vector<const ProbMap*> refs, preds;
    for (const auto& r : ref_l) refs.push_back(&r);
    for (const auto& r : ref_u) refs.push_back(&r);
    for (const auto& b : sup_l) preds.push_back(&b.probs);
    for (const auto& b : sup_u) preds.push_back(&b.probs);
    if (sl) {
        for (const auto& b : sup_l) refs.push_back(&b.probs);
        preds.clear();
    }
    update_tracker_from(state, refs, preds);

    StepReport rep;
    finish_report(state, rep);
    NetGradients grads = zero_gradients(student);

    const float inv_l = batch.labeled.empty() ? 0.0f : 1.0f / batch.labeled.size();
    for (size_t i = 0; i < batch.labeled.size(); ++i) {
        const ProbMap& ref = sl ? sup_l[i].probs : ref_l[i];
        SupervisedLoss loss = supervised_het_loss(sup_l[i].probs, ref, *batch.labeled[i].labels,
                                                  state.tracker, state.cfg.w_labeled);
        rep.sup_loss += loss.value * inv_l;
        scale_and_sum(rep.labeled_regions, loss.regions);
        for (float& g : loss.d_logits) g *= inv_l;
        accumulate(grads, backward(student, sup_l[i].cache, loss.d_logits));
    }

    if (!sl && !batch.unlabeled.empty()) {
        const float scale_u = static_cast<float>(rep.lambda) / batch.unlabeled.size();
        const float inv_u = 1.0f / batch.unlabeled.size();
        for (size_t i = 0; i < batch.unlabeled.size(); ++i) {
            UnsupervisedLoss loss = unsupervised_het_loss(sup_u[i].probs, ref_u[i], state.tracker,
                                                          state.cfg.w_unlabeled,
                                                          state.cfg.unsup_dice);
            rep.unsup_loss += loss.value * inv_u;
            scale_and_sum(rep.unlabeled_regions, loss.regions);
            for (float& g : loss.d_logits) g *= scale_u;
            accumulate(grads, backward(student, sup_u[i].cache, loss.d_logits));
        }
    }

    sgd_step(student, grads, static_cast<float>(lr_now(state)));
    if (!sl) ema_update(*state.model_b, student, state.cfg.ema_momentum);
    return rep;
}

StepReport step_cps_like(TrainState& state, const Batch& batch) {
    TinySegNet& a = state.model_a;
    TinySegNet& b = *state.model_b;

    std::vector<ForwardBundle> a_l, a_u, b_l, b_u;
    for (const auto& ex : batch.labeled) {
        a_l.push_back(run_forward(a, *ex.image));
        b_l.push_back(run_forward(b, *ex.image));
    }
    for (const Image* img : batch.unlabeled) {
        a_u.push_back(run_forward(a, *img));
        b_u.push_back(run_forward(b, *img));
    }

    // every output serves as a reference for the other model
    std::vector<const ProbMap*> refs;
    for (const auto* vec : {&a_l, &a_u, &b_l, &b_u})
        for (const auto& bundle : *vec) refs.push_back(&bundle.probs);
    update_tracker_from(state, refs, {});

    StepReport rep;
    finish_report(state, rep);
    NetGradients grads_a = zero_gradients(a), grads_b = zero_gradients(b);

    const float inv_l = batch.labeled.empty() ? 0.0f : 1.0f / batch.labeled.size();
    for (size_t i = 0; i < batch.labeled.size(); ++i) {
        SupervisedLoss la = supervised_het_loss(a_l[i].probs, b_l[i].probs,
                                                *batch.labeled[i].labels, state.tracker,
                                                state.cfg.w_labeled);
        SupervisedLoss lb = supervised_het_loss(b_l[i].probs, a_l[i].probs,
                                                *batch.labeled[i].labels, state.tracker,
                                                state.cfg.w_labeled);
        rep.sup_loss += (la.value + lb.value) * 0.5 * inv_l;
        scale_and_sum(rep.labeled_regions, la.regions);
        for (float& g : la.d_logits) g *= inv_l;
        for (float& g : lb.d_logits) g *= inv_l;
        accumulate(grads_a, backward(a, a_l[i].cache, la.d_logits));
        accumulate(grads_b, backward(b, b_l[i].cache, lb.d_logits));
    }

    if (!batch.unlabeled.empty()) {
        const float scale_u = static_cast<float>(rep.lambda) / batch.unlabeled.size();
        const float inv_u = 1.0f / batch.unlabeled.size();
        for (size_t i = 0; i < batch.unlabeled.size(); ++i) {
            UnsupervisedLoss ua = unsupervised_het_loss(a_u[i].probs, b_u[i].probs, state.tracker,
                                                        state.cfg.w_unlabeled,
                                                        state.cfg.unsup_dice);
            UnsupervisedLoss ub = unsupervised_het_loss(b_u[i].probs, a_u[i].probs, state.tracker,
                                                        state.cfg.w_unlabeled,
                                                        state.cfg.unsup_dice);
            rep.unsup_loss += (ua.value + ub.value) * 0.5 * inv_u;
            scale_and_sum(rep.unlabeled_regions, ua.regions);
            for (float& g : ua.d_logits) g *= scale_u;
            for (float& g : ub.d_logits) g *= scale_u;
            accumulate(grads_a, backward(a, a_u[i].cache, ua.d_logits));
            accumulate(grads_b, backward(b, b_u[i].cache, ub.d_logits));
        }
    }

    const float lr = static_cast<float>(lr_now(state));
    sgd_step(a, grads_a, lr);
    sgd_step(b, grads_b, lr);
    return rep;
}

StepReport step_fixmatch_like(TrainState& state, const Batch& batch) {
    TinySegNet& net = state.model_a;
    const StrongAugmentParams& sp = state.cfg.strong_params;

    struct View {
        ProbMap ref;       // weak view, no gradient
        ForwardBundle sup; // strong view
        LabelMap labels;   // weak-view labels (labeled images only)
        bool has_labels = false;
    };

    std::vector<View> views_l, views_u;
    uint64_t item = 0;
    auto build_view = [&](const Image& img, const LabelMap* labels) {
        const uint64_t ws = stream_seed(state, 11, item);
        const uint64_t ss = stream_seed(state, 13, item);
        ++item;
        LabelMap dummy(img.height, img.width, 0);
        WeakView weak = weak_augment(img, labels ? *labels : dummy, ws);
        Image strong = strong_augment(img, weak.geometry, ss, sp);
        View v;
        v.ref = softmax(forward_logits(net, weak.image));
        v.sup = run_forward(net, strong);
        if (labels) {
            v.labels = std::move(weak.labels);
            v.has_labels = true;
        }
        return v;
    };
    for (const auto& ex : batch.labeled) views_l.push_back(build_view(*ex.image, ex.labels));
    for (const Image* img : batch.unlabeled) views_u.push_back(build_view(*img, nullptr));

    std::vector<const ProbMap*> refs, preds;
    for (const auto& v : views_l) refs.push_back(&v.ref);
    for (const auto& v : views_u) refs.push_back(&v.ref);
    for (const auto& v : views_l) preds.push_back(&v.sup.probs);
    for (const auto& v : views_u) preds.push_back(&v.sup.probs);
    update_tracker_from(state, refs, preds);

    StepReport rep;
    finish_report(state, rep);
    NetGradients grads = zero_gradients(net);

    const float inv_l = views_l.empty() ? 0.0f : 1.0f / views_l.size();
    for (auto& v : views_l) {
        SupervisedLoss loss = supervised_het_loss(v.sup.probs, v.ref, v.labels, state.tracker,
                                                  state.cfg.w_labeled);
        rep.sup_loss += loss.value * inv_l;
        scale_and_sum(rep.labeled_regions, loss.regions);
        for (float& g : loss.d_logits) g *= inv_l;
        accumulate(grads, backward(net, v.sup.cache, loss.d_logits));
    }

    if (!views_u.empty()) {
        const float scale_u = static_cast<float>(rep.lambda) / views_u.size();
        const float inv_u = 1.0f / views_u.size();
        for (auto& v : views_u) {
            UnsupervisedLoss loss = unsupervised_het_loss(v.sup.probs, v.ref, state.tracker,
                                                          state.cfg.w_unlabeled,
                                                          state.cfg.unsup_dice);
            rep.unsup_loss += loss.value * inv_u;
            scale_and_sum(rep.unlabeled_regions, loss.regions);
            for (float& g : loss.d_logits) g *= scale_u;
            accumulate(grads, backward(net, v.sup.cache, loss.d_logits));
        }
    }

    sgd_step(net, grads, static_cast<float>(lr_now(state)));
    return rep;
}

StepReport step_rdrop_like(TrainState& state, const Batch& batch) {
    TinySegNet& net = state.model_a;

    struct TwoPass {
        ForwardBundle first, second;
    };
    auto run_two = [&](const Image& img, uint64_t item) {
        DropoutSpec d1{state.cfg.dropout_rate, stream_seed(state, 21, item)};
        DropoutSpec d2{state.cfg.dropout_rate, stream_seed(state, 23, item)};
        return TwoPass{run_forward(net, img, d1), run_forward(net, img, d2)};
    };

    std::vector<TwoPass> passes_l, passes_u;
    uint64_t item = 0;
    for (const auto& ex : batch.labeled) passes_l.push_back(run_two(*ex.image, item++));
    for (const Image* img : batch.unlabeled) passes_u.push_back(run_two(*img, item++));

    // the second pass plays the reference role for the labeled wiring
    std::vector<const ProbMap*> refs, preds;
    for (const auto& p : passes_l) refs.push_back(&p.second.probs);
    for (const auto& p : passes_u) refs.push_back(&p.second.probs);
    for (const auto& p : passes_l) preds.push_back(&p.first.probs);
    for (const auto& p : passes_u) preds.push_back(&p.first.probs);
    update_tracker_from(state, refs, preds);

    StepReport rep;
    finish_report(state, rep);
    NetGradients grads = zero_gradients(net);

    const float inv_l = passes_l.empty() ? 0.0f : 1.0f / passes_l.size();
    for (size_t i = 0; i < passes_l.size(); ++i) {
        SupervisedLoss loss = supervised_het_loss(passes_l[i].first.probs,
                                                  passes_l[i].second.probs,
                                                  *batch.labeled[i].labels, state.tracker,
                                                  state.cfg.w_labeled);
        rep.sup_loss += loss.value * inv_l;
        scale_and_sum(rep.labeled_regions, loss.regions);
        for (float& g : loss.d_logits) g *= inv_l;
        accumulate(grads, backward(net, passes_l[i].first.cache, loss.d_logits));
    }

    if (!passes_u.empty()) {
        const float scale_u = static_cast<float>(rep.lambda) / passes_u.size();
        const float inv_u = 1.0f / passes_u.size();
        for (auto& p : passes_u) {
            // bidirectional: each pass is supervised by the other's argmax
            UnsupervisedLoss dir1 = unsupervised_het_loss(p.first.probs, p.second.probs,
                                                          state.tracker, state.cfg.w_unlabeled,
                                                          state.cfg.unsup_dice);
            UnsupervisedLoss dir2 = unsupervised_het_loss(p.second.probs, p.first.probs,
                                                          state.tracker, state.cfg.w_unlabeled,
                                                          state.cfg.unsup_dice);
            rep.unsup_loss += (dir1.value + dir2.value) * inv_u;
            scale_and_sum(rep.unlabeled_regions, dir1.regions);
            for (float& g : dir1.d_logits) g *= scale_u;
            for (float& g : dir2.d_logits) g *= scale_u;
            accumulate(grads, backward(net, p.first.cache, dir1.d_logits));
            accumulate(grads, backward(net, p.second.cache, dir2.d_logits));
        }
    }

    sgd_step(net, grads, static_cast<float>(lr_now(state)));
    return rep;
}

}  // namespace

StepReport step(TrainState& state, const Batch& batch) {
    StepReport rep;
    switch (state.cfg.kind) {
        case BackboneKind::MT:
        case BackboneKind::PlainMT:
        case BackboneKind::SL:
            rep = step_mt_like(state, batch);
            break;
        case BackboneKind::CPS:
        case BackboneKind::PlainCPS:
            rep = step_cps_like(state, batch);
            break;
        case BackboneKind::FixMatch:
        case BackboneKind::PlainFixMatch:
            rep = step_fixmatch_like(state, batch);
            break;
        case BackboneKind::RDrop:
        case BackboneKind::PlainRDrop:
            rep = step_rdrop_like(state, batch);
            break;
    }
    state.step_index += 1;
    return rep;
}

}  // namespace metassl
