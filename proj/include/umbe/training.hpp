// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Two-stage training: stage 1 presents each sample one modality at a time with
// only same-tag prompts eligible; stage 2 moves the prompts stage 1 activated
// into a new pool and trains with random modality dropout.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "umbe/model.hpp"
#include "umbe/optim.hpp"
#include "umbe/rng.hpp"

namespace umbe {

struct TrainConfig {
    double lr_init = 0.002;
    std::size_t batch_size = 16;
    double lr_decay = 0.6;
    std::size_t patience_epochs = 3;
    double lr_floor = 1e-7;
    double train_acc_stop = 0.80;
    double improve_epsilon = 1e-4;
    std::size_t max_epochs = 200;
    std::size_t stage1_max_epochs = 5;
    std::uint64_t seed = 7;
    std::array<double, kNumModalities> stage2_dropout{0.3, 0.3, 0.3};
    std::uint64_t transfer_threshold = 1;
    bool restore_pool_size = true;
    double val_fraction = 0.1;

    ScheduleConfig schedule() const {
        return {lr_init, lr_decay, patience_epochs, lr_floor, train_acc_stop, improve_epsilon};
    }

    void validate() const {
        if (!(lr_init > 0.0)) throw ConfigError("lr_init must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw ConfigError("lr_decay must lie in (0, 1)");
        if (!(train_acc_stop > 0.0 && train_acc_stop <= 1.0)) throw ConfigError("train_acc_stop must lie in (0, 1]");
        if (patience_epochs < 1) throw ConfigError("patience_epochs must be >= 1");
        if (!(lr_floor > 0.0)) throw ConfigError("lr_floor must be > 0");
        if (improve_epsilon < 0.0) throw ConfigError("improve_epsilon must be >= 0");
        for (double p : stage2_dropout)
            if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probabilities must lie in [0, 1)");
        if (transfer_threshold < 1) throw ConfigError("transfer_threshold must be >= 1");
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0, 1)");
    }
};

/// Drops each modality independently; all-dropped draws are redrawn.
inline Presence sample_presence(Rng& rng, const std::array<double, kNumModalities>& drop) {
    for (;;) {
        Presence p{};
        for (std::size_t m = 0; m < kNumModalities; ++m) p[m] = rng.uniform() >= drop[m];
        if (present_count(p) > 0) return p;
    }
}

struct EpochRecord {
    int stage = 1;
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_accuracy = 0.0;
};

struct StageResult {
    std::string stop_reason;
    std::vector<EpochRecord> history;
    std::array<std::uint64_t, kNumTags> activations_by_tag{};
};

/// Everything a checkpoint captures: the model, optimizer moments, schedule
/// state and the training generator.
struct Session {
    TrainConfig train_config;
    UmbeModel model;
    TrainState state;
    Adam adam;
    Rng rng;

    static Session create(const ModelConfig& mc, const TrainConfig& tc) {
        tc.validate();
        Session s{tc, UmbeModel::create(mc), {}, {}, Rng(tc.seed)};
        s.reset_schedule(1);
        return s;
    }

    void reset_schedule(int stage) {
        state = TrainState{};
        state.lr = train_config.lr_init;
        state.stage = stage;
    }
};

/// Training/validation samples. An explicit validation split is used as is;
/// otherwise `fraction` of the training samples is held out (seeded).
inline std::pair<std::vector<ModalitySample>, std::vector<ModalitySample>> split_validation(
    const std::vector<ModalitySample>& train, const std::vector<ModalitySample>& val, double fraction,
    std::uint64_t seed) {
    if (!val.empty() || fraction <= 0.0) return {train, val};
    std::vector<std::size_t> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed ^ 0x5bd1e995ULL);
    rng.shuffle(idx);
    const std::size_t n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train.size())));
    std::vector<ModalitySample> tr, va;
    for (std::size_t i = 0; i < idx.size(); ++i) (i < n_val ? va : tr).push_back(train[idx[i]]);
    return {std::move(tr), std::move(va)};
}

namespace detail {

struct View {
    Presence presence;
    TagFilter eligible;
};

struct Item {
    std::size_t sample;
    View view;
};

inline bool has_view(const ModalitySample& s, const View& v) {
    for (std::size_t m = 0; m < kNumModalities; ++m)
        if (v.presence[m] && !s.features[m]) return false;
    return true;
}

struct ViewStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Mean per-sample objective (plus the L1 term) and accuracy over every
// sample/view pair the samples support.
inline ViewStats evaluate_views(UmbeModel& model, const std::vector<ModalitySample>& samples,
                                const std::vector<View>& views) {
    double loss = 0.0;
    std::size_t correct = 0, n = 0;
    for (const auto& s : samples)
        for (const auto& v : views) {
            if (!has_view(s, v)) continue;
            Graph g;
            ForwardOptions opt;
            opt.eligible = v.eligible;
            ForwardResult r = model.forward(g, s.restricted(v.presence), opt);
            loss += r.sample_loss.item();
            correct += umbe::predict(r.scores.value().data) == s.label;
            ++n;
        }
    if (n == 0) return {};
    return {loss / static_cast<double>(n) + l1_penalty_value(model.gate),
            static_cast<double>(correct) / static_cast<double>(n)};
}

inline double train_batch(Session& s, const std::vector<ModalitySample>& train, const std::vector<Item>& batch) {
    UmbeModel& model = s.model;
    model.zero_grad();
    const double inv = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const Item& it : batch) {
        Graph g;
        ForwardOptions opt;
        opt.eligible = it.view.eligible;
        opt.record_activation = true;
        ForwardResult r = model.forward(g, train[it.sample].restricted(it.view.presence), opt);
        total += r.sample_loss.item();
        g.backward(scale(r.sample_loss, inv));
    }
    if (model.gate.lambda > 0.0) {
        Graph g;
        g.backward(l1_penalty(g, model.gate));
    }
    s.adam.step(model.parameters(), s.state.lr);
    model.pool.renormalize_keys();
    return total * inv;
}

inline StageResult run_stage(Session& s, const std::vector<ModalitySample>& train,
                             const std::vector<ModalitySample>& val,
                             const std::function<std::vector<Item>(Rng&)>& epoch_items,
                             const std::vector<View>& eval_views, std::size_t max_epochs) {
    StageResult out;
    const ScheduleConfig sched = s.train_config.schedule();
    const std::size_t bs = s.train_config.batch_size;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        std::vector<Item> items = epoch_items(s.rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < items.size(); b += bs) {
            std::vector<Item> batch(items.begin() + static_cast<std::ptrdiff_t>(b),
                                    items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), b + bs)));
            loss_sum += train_batch(s, train, batch);
            ++batches;
        }
        const ViewStats tr = evaluate_views(s.model, train, eval_views);
        const ViewStats va = val.empty() ? tr : evaluate_views(s.model, val, eval_views);
        EpochRecord rec{s.state.stage, s.state.epoch + 1, s.state.lr,
                        batches ? loss_sum / static_cast<double>(batches) : 0.0, va.loss, tr.accuracy};
        const StepDecision d = lr_step(s.state, va.loss, sched, tr.accuracy);
        out.history.push_back(rec);
        if (d != StepDecision::proceed) {
            out.stop_reason = decision_name(d);
            break;
        }
    }
    if (out.stop_reason.empty()) out.stop_reason = "max_epochs";
    for (const auto& e : s.model.pool.entries) out.activations_by_tag[static_cast<std::size_t>(e.tag)] += e.activation_count;
    return out;
}

}  // namespace detail

/// Stage 1: every sample is shown once per listed modality with only that
/// modality present, and only prompts tagged with it compete.
inline StageResult stage1_train(Session& s, const std::vector<ModalitySample>& train,
                                const std::vector<ModalitySample>& val,
                                const std::vector<Modality>& modalities = {kModalities.begin(), kModalities.end()}) {
    if (modalities.empty()) throw ConfigError("stage 1 needs at least one modality");
    std::vector<detail::View> views;
    for (Modality m : modalities) {
        const bool any = std::any_of(train.begin(), train.end(), [&](const auto& x) { return x.features[index_of(m)].has_value(); });
        if (!any) throw ConfigError(std::string("training data has no ") + modality_name(m) + " features");
        views.push_back({only(m), only_tag(tag_for(m))});
    }
    s.reset_schedule(1);
    s.model.pool.reset_activation_counts();
    auto items = [&](Rng& rng) {
        std::vector<detail::Item> out;
        for (std::size_t i = 0; i < train.size(); ++i)
            for (const auto& v : views)
                if (detail::has_view(train[i], v)) out.push_back({i, v});
        rng.shuffle(out);
        return out;
    };
    return detail::run_stage(s, train, val, items, views, s.train_config.stage1_max_epochs);
}

namespace detail {
inline StageResult dropout_stage(Session& s, const std::vector<ModalitySample>& train,
                                 const std::vector<ModalitySample>& val) {
    const auto drop = s.train_config.stage2_dropout;
    auto items = [&](Rng& rng) {
        std::vector<Item> out;
        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t i : order) {
            Presence p = sample_presence(rng, drop);
            // samples that lack a modality keep it absent
            for (std::size_t m = 0; m < kNumModalities; ++m) p[m] = p[m] && train[i].features[m].has_value();
            if (present_count(p) == 0) p = train[i].presence();
            out.push_back({i, {p, kAllTags}});
        }
        return out;
    };
    const std::vector<View> views{{Presence{true, true, true}, kAllTags}};
    return run_stage(s, train, val, items, views, s.train_config.max_epochs);
}
}  // namespace detail

/// Stage 2: transfer the prompts stage 1 activated into a new pool (topped
/// up with fresh multimodal prompts when `restore_pool_size`), then train
/// with random modality dropout and every prompt eligible.
inline StageResult stage2_train(Session& s, const std::vector<ModalitySample>& train,
                                const std::vector<ModalitySample>& val) {
    const auto& tc = s.train_config;
    s.model.pool = transfer_activated(s.model.pool, tc.transfer_threshold,
                                      tc.restore_pool_size ? std::optional<std::size_t>(s.model.config.pool_size)
                                                           : std::nullopt,
                                      &s.rng);
    if (s.model.pool.size() < s.model.config.top_k) s.model.config.top_k = s.model.pool.size();
    s.adam.reset();
    s.reset_schedule(2);
    return detail::dropout_stage(s, train, val);
}

/// Dropout training from the current pool with no stage-1 transfer.
inline StageResult single_stage_train(Session& s, const std::vector<ModalitySample>& train,
                                      const std::vector<ModalitySample>& val) {
    s.reset_schedule(2);
    return detail::dropout_stage(s, train, val);
}

}  // namespace umbe
