// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "umbe/graph.hpp"
#include "umbe/rng.hpp"

namespace umbe {

/// Gating network x ↦ x ⊙ σ(W2·relu(W1·x + b1) + b2), applied per prompt token,
/// with an L1 penalty of weight `lambda` on W1 only.
struct SparseGate {
    Tensor w1;  // [hidden x D]
    Tensor b1;  // [hidden]
    Tensor w2;  // [D x hidden]
    Tensor b2;  // [D]
    double lambda = 0.0;

    static SparseGate create(std::size_t token_dim, std::size_t hidden, double lambda, Rng& rng) {
        if (lambda < 0.0) throw ConfigError("L1 weight lambda must be >= 0");
        if (token_dim == 0 || hidden == 0) throw ConfigError("gate widths must be >= 1");
        SparseGate g;
        g.w1 = glorot_uniform(hidden, token_dim, rng);
        g.b1 = zeros_param({hidden});
        g.w2 = glorot_uniform(token_dim, hidden, rng);
        g.b2 = zeros_param({token_dim});
        g.lambda = lambda;
        return g;
    }

    std::size_t token_dim() const { return w1.shape[1]; }

    template <class F>
    void for_each_parameter(F&& f) {
        f("gate.w1", w1);
        f("gate.b1", b1);
        f("gate.w2", w2);
        f("gate.b2", b2);
    }
};

/// Gate values σ(W2·relu(W1·x + b1) + b2) for every row of `tokens`.
inline Var gate_values(Graph& g, Var tokens, SparseGate& gate) {
    Var h = relu(linear(tokens, g.leaf(gate.w1), g.leaf(gate.b1)));
    return sigmoid(linear(h, g.leaf(gate.w2), g.leaf(gate.b2)));
}

/// Gates the selected prompt values. Returns the gated tokens stacked in
/// selection order, [(k·L_p) x D], or nothing for an empty selection.
inline std::optional<Var> sparse_feature_fusion(Graph& g, const std::vector<Var>& selected, SparseGate& gate) {
    if (selected.empty()) return std::nullopt;
    for (const Var& v : selected)
        if (v.value().cols() != gate.token_dim())
            throw DimensionError("prompt token width " + std::to_string(v.value().cols()) +
                                 " does not match gate width " + std::to_string(gate.token_dim()));
    Var x = selected.size() == 1 ? selected.front() : concat_rows(selected);
    return mul(x, gate_values(g, x, gate));
}

/// λ·Σ|W1| as a graph node.
inline Var l1_penalty(Graph& g, SparseGate& gate) { return scale(abs_sum(g.leaf(gate.w1)), gate.lambda); }

inline double l1_penalty_value(const SparseGate& gate) {
    double s = 0.0;
    for (double v : gate.w1.data) s += std::abs(v);
    return gate.lambda * s;
}

/// Number of W1 entries with magnitude above `threshold`.
inline std::size_t count_active_weights(const SparseGate& gate, double threshold = 1e-3) {
    std::size_t n = 0;
    for (double v : gate.w1.data) n += std::abs(v) > threshold;
    return n;
}

/// One trainable [L_i x D] token matrix per class.
struct InherentPrompts {
    std::vector<Tensor> per_class;

    static InherentPrompts create(std::size_t num_classes, std::size_t length, std::size_t token_dim, Rng& rng) {
        if (num_classes == 0 || length == 0) throw ConfigError("inherent prompts need >= 1 class and length >= 1");
        InherentPrompts p;
        for (std::size_t c = 0; c < num_classes; ++c) p.per_class.push_back(gaussian({length, token_dim}, 0.02, rng));
        return p;
    }

    std::size_t num_classes() const { return per_class.size(); }

    template <class F>
    void for_each_parameter(F&& f) {
        for (std::size_t c = 0; c < per_class.size(); ++c) f("inherent." + std::to_string(c), per_class[c]);
    }
};

/// Gated prompts followed by the class's inherent prompts.
inline Var combine(const std::optional<Var>& gated, Var inherent) {
    if (!gated) return inherent;
    if (gated->value().cols() != inherent.value().cols())
        throw DimensionError("combine: gated width " + std::to_string(gated->value().cols()) +
                             " vs inherent width " + std::to_string(inherent.value().cols()));
    return concat_rows({*gated, inherent});
}

}  // namespace umbe
