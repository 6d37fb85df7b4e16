// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "umbe/graph.hpp"
#include "umbe/rng.hpp"

namespace umbe {

/// Aggregates an R×D prompt matrix into an F-vector: row mean, then W·x + b.
struct PromptEncoder {
    Tensor weight;  // [F x D]
    Tensor bias;    // [F]

    static PromptEncoder create(std::size_t feature_dim, std::size_t token_dim, Rng& rng) {
        return {glorot_uniform(feature_dim, token_dim, rng), zeros_param({feature_dim})};
    }

    Var encode(Graph& g, Var prompts) { return linear(mean_rows(prompts), g.leaf(weight), g.leaf(bias)); }

    template <class F>
    void for_each_parameter(F&& f) {
        f("prompt_encoder.weight", weight);
        f("prompt_encoder.bias", bias);
    }
};

/// s_c = cosine(F_fusion, E_p(P_combined[c])) / τ for each class.
inline Var class_scores(Graph& g, Var fused, const std::vector<Var>& combined, PromptEncoder& ep, double tau) {
    if (!(tau > 0.0)) throw ConfigError("temperature must be > 0");
    if (combined.empty()) throw DimensionError("class_scores needs at least one class");
    std::vector<Var> s;
    s.reserve(combined.size());
    for (const Var& p : combined) s.push_back(cosine(fused, ep.encode(g, p)));
    return scale(stack_scalars(s), 1.0 / tau);
}

/// −log(exp(s_label) / Σ_j exp(s_j)).
inline Var contrastive_loss(Var scores, std::size_t label) { return softmax_cross_entropy(scores, label); }

/// L_contrast + λ·Σ|W1| + β·key_align, where `l1` already carries λ.
inline Var total_loss(Var contrast, Var l1, Var key_align, double beta) {
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
    return add(add(contrast, l1), scale(key_align, beta));
}

/// Index of the largest score; ties resolve to the lowest index.
inline std::size_t predict(std::span<const double> scores) {
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace umbe
