// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "umbe/encoders.hpp"
#include "umbe/graph.hpp"
#include "umbe/rng.hpp"

namespace umbe {

/// Additive attention mask over the three modality tokens. Column j is
/// kMaskedLogit when modality j is absent; rows of absent modalities are
/// excluded from pooling.
struct ModalMask {
    Tensor logits{Shape{kNumModalities, kNumModalities}};
    Presence presence{};

    bool excluded(std::size_t row) const { return !presence[row]; }
    std::vector<std::size_t> pooled_rows() const {
        std::vector<std::size_t> rows;
        for (std::size_t m = 0; m < kNumModalities; ++m)
            if (presence[m]) rows.push_back(m);
        return rows;
    }
};

inline ModalMask build_mask(const Presence& presence) {
    if (present_count(presence) == 0) throw DegenerateError("modal mask needs at least one present modality");
    ModalMask mask;
    mask.presence = presence;
    for (std::size_t i = 0; i < kNumModalities; ++i)
        for (std::size_t j = 0; j < kNumModalities; ++j) mask.logits(i, j) = presence[j] ? 0.0 : kMaskedLogit;
    return mask;
}

/// Single-head self-attention projections (each F×F, no bias).
struct FusionParams {
    Tensor w_query, w_key, w_value;

    static FusionParams init(std::size_t feature_dim, Rng& rng) {
        return {glorot_uniform(feature_dim, feature_dim, rng), glorot_uniform(feature_dim, feature_dim, rng),
                glorot_uniform(feature_dim, feature_dim, rng)};
    }

    template <class F>
    void for_each_parameter(F&& f) {
        f("fusion.w_query", w_query);
        f("fusion.w_key", w_key);
        f("fusion.w_value", w_value);
    }
};

struct FusionOutput {
    Var fused;      // 1×F
    Var attention;  // 3×3 row-stochastic weights
};

/// Masked self-attention over [F_v; F_a; F_t], mean-pooled over the rows of
/// present modalities.
inline FusionOutput adaptive_fusion(Graph& g, const EncodedSample& tokens, const ModalMask& mask,
                                    FusionParams& params) {
    if (mask.presence != tokens.presence) throw ContractError("modal mask does not match sample presence");
    const std::size_t f = tokens.features[0].value().size();
    for (const Var& t : tokens.features)
        if (t.value().size() != f) throw DimensionError("modality tokens must share the feature width");
    if (params.w_query.shape != Shape{f, f}) throw DimensionError("fusion projections must be FxF");

    Var x = concat_rows({tokens.features[0], tokens.features[1], tokens.features[2]});
    Var q = linear(x, g.leaf(params.w_query));
    Var k = linear(x, g.leaf(params.w_key));
    Var v = linear(x, g.leaf(params.w_value));
    Var logits = scale(add_mask(matmul(q, transpose(k)), mask.logits), 1.0 / std::sqrt(static_cast<double>(f)));
    Var attn = softmax_rows(logits);
    Var out = matmul(attn, v);
    Var fused = mean_rows(select_rows(out, mask.pooled_rows()));
    return {fused, attn};
}

}  // namespace umbe
