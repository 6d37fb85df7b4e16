// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "umbe/encoders.hpp"
#include "umbe/fusion.hpp"
#include "umbe/objective.hpp"
#include "umbe/prompt_pool.hpp"
#include "umbe/sparse_fusion.hpp"

namespace umbe {

struct ModelConfig {
    std::size_t num_classes = 7;
    std::array<std::size_t, kNumModalities> input_dims{32, 16, 24};
    std::size_t feature_dim = 32;
    std::size_t anchor_hidden = 64;
    std::array<double, kNumModalities> budget = kDefaultBudget;
    std::size_t pool_size = 32;
    std::size_t prompt_length = 64;
    std::size_t top_k = 5;
    std::size_t inherent_length = 16;
    std::size_t gate_hidden = 0;  // 0 means "same as the token width"
    QueryMapping mapping = QueryMapping::linear;
    double tau = 0.07;
    double beta = 0.1;
    double lambda = 1e-4;
    std::uint64_t seed = 7;

    std::size_t token_dim() const { return feature_dim; }

    void validate() const {
        if (num_classes < 2) throw ConfigError("need at least two classes");
        if (feature_dim == 0) throw ConfigError("feature_dim must be >= 1");
        if (top_k < 1 || top_k > pool_size)
            throw ConfigError("top_k must satisfy 1 <= top_k <= pool_size (" + std::to_string(top_k) + " vs " +
                              std::to_string(pool_size) + ")");
        if (prompt_length == 0 || inherent_length == 0) throw ConfigError("prompt lengths must be >= 1");
        if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
        if (beta < 0.0) throw ConfigError("beta must be >= 0");
        if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    }
};

struct ForwardOptions {
    TagFilter eligible = kAllTags;
    bool record_activation = false;
    /// Reuse a previous selection instead of ranking (finite-difference checks
    /// hold the discrete choice fixed).
    const Selection* fixed_selection = nullptr;
    Placeholders placeholders{};
};

struct ForwardResult {
    Var fused;
    Var query;
    Var scores;
    Var contrast;
    Var key_align;
    Var sample_loss;  // contrast + β·key_align; the L1 term is added once per batch
    Selection selection;
};

/// Encoders, adaptive fusion, prompt pool, sparse gate, inherent prompts and
/// the prompt aggregator wired together.
class UmbeModel {
public:
    ModelConfig config;
    EncoderStack encoders;
    FusionParams fusion;
    QueryMapper mapper;
    PromptPool pool;
    SparseGate gate;
    InherentPrompts inherent;
    PromptEncoder prompt_encoder;

    static UmbeModel create(const ModelConfig& cfg) {
        cfg.validate();
        UmbeModel m;
        m.config = cfg;
        m.encoders = build_encoders(cfg.input_dims[0], cfg.input_dims[1], cfg.input_dims[2], cfg.feature_dim,
                                    cfg.budget, cfg.seed, cfg.anchor_hidden);
        Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        const std::size_t d = cfg.token_dim();
        m.fusion = FusionParams::init(cfg.feature_dim, rng);
        m.mapper = QueryMapper::create(cfg.mapping, cfg.feature_dim, rng);
        m.pool = PromptPool::create(cfg.pool_size, cfg.prompt_length, d, cfg.feature_dim, rng);
        m.gate = SparseGate::create(d, cfg.gate_hidden ? cfg.gate_hidden : d, cfg.lambda, rng);
        m.inherent = InherentPrompts::create(cfg.num_classes, cfg.inherent_length, d, rng);
        m.prompt_encoder = PromptEncoder::create(cfg.feature_dim, d, rng);
        return m;
    }

    /// Visits every trainable tensor with a stable name.
    template <class F>
    void for_each_parameter(F&& f) {
        encoders.for_each_parameter(f);
        fusion.for_each_parameter(f);
        mapper.for_each_parameter(f);
        pool.for_each_parameter(f);
        gate.for_each_parameter(f);
        inherent.for_each_parameter(f);
        prompt_encoder.for_each_parameter(f);
    }

    std::vector<std::pair<std::string, Tensor*>> parameters() {
        std::vector<std::pair<std::string, Tensor*>> out;
        for_each_parameter([&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
        return out;
    }

    void zero_grad() {
        for_each_parameter([](const std::string&, Tensor& t) { t.zero_grad(); });
    }

    ForwardResult forward(Graph& g, const ModalitySample& sample, const ForwardOptions& opt = {}) {
        sample.validate(config.num_classes);
        ForwardResult r;
        EncodedSample tokens = encode(g, sample, encoders, opt.placeholders);
        r.fused = adaptive_fusion(g, tokens, build_mask(tokens.presence), fusion).fused;
        r.query = mapper.map(g, r.fused);

        if (opt.fixed_selection) {
            r.selection = *opt.fixed_selection;
        } else {
            const auto& q = r.query.value().data;
            r.selection = opt.record_activation ? select_topk(pool, q, config.top_k, opt.eligible)
                                                : rank_topk(pool, q, config.top_k, opt.eligible);
        }
        std::optional<Var> gated = sparse_feature_fusion(g, gather_values(g, pool, r.selection.indices), gate);

        std::vector<Var> combined;
        combined.reserve(config.num_classes);
        for (auto& p : inherent.per_class) combined.push_back(combine(gated, g.leaf(p)));
        r.scores = class_scores(g, r.fused, combined, prompt_encoder, config.tau);
        r.contrast = contrastive_loss(r.scores, sample.label);
        r.key_align = key_alignment(g, r.query, pool, r.selection);
        r.sample_loss = add(r.contrast, scale(r.key_align, config.beta));
        return r;
    }

    /// Predicted class and class scores, without touching activation counts.
    std::pair<std::size_t, std::vector<double>> predict(const ModalitySample& sample) {
        Graph g;
        ForwardResult r = forward(g, sample);
        std::vector<double> s = r.scores.value().data;
        return {umbe::predict(s), std::move(s)};
    }
};

}  // namespace umbe
