// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "umbe/encoders.hpp"
#include "umbe/graph.hpp"
#include "umbe/rng.hpp"

namespace umbe {

struct EmptyTransferError : Error {
    explicit EmptyTransferError(const std::string& w) : Error("empty_transfer", w) {}
};

enum class PromptTag : std::uint8_t { visual = 0, audio = 1, text = 2, multimodal = 3 };
inline constexpr std::size_t kNumTags = 4;

inline const char* tag_name(PromptTag t) {
    switch (t) {
        case PromptTag::visual: return "visual";
        case PromptTag::audio: return "audio";
        case PromptTag::text: return "text";
        case PromptTag::multimodal: return "multimodal";
    }
    return "?";
}

inline PromptTag tag_for(Modality m) { return static_cast<PromptTag>(index_of(m)); }

/// Which tags may compete in a selection.
using TagFilter = std::array<bool, kNumTags>;
inline constexpr TagFilter kAllTags{true, true, true, true};
inline TagFilter only_tag(PromptTag t) {
    TagFilter f{false, false, false, false};
    f[static_cast<std::size_t>(t)] = true;
    return f;
}

/// Plain cosine similarity; throws DegenerateError when either norm is below
/// kNormEpsilon.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity: size mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < kNormEpsilon || nb < kNormEpsilon) throw DegenerateError("cosine_similarity: vector norm below epsilon");
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

struct PromptEntry {
    Tensor key;    // [F]
    Tensor value;  // [L_p x D]
    PromptTag tag = PromptTag::multimodal;
    std::uint64_t activation_count = 0;
};

inline Tensor random_unit_key(std::size_t dim, Rng& rng) {
    Tensor k(Shape{dim});
    double n = 0.0;
    while (n < 1e-6) {
        n = 0.0;
        for (double& v : k.data) {
            v = rng.normal();
            n += v * v;
        }
        n = std::sqrt(n);
    }
    for (double& v : k.data) v /= n;
    k.requires_grad = true;
    return k;
}

inline PromptEntry fresh_entry(std::size_t key_dim, std::size_t length, std::size_t token_dim, PromptTag tag,
                               Rng& rng) {
    PromptEntry e;
    e.key = random_unit_key(key_dim, rng);
    e.value = gaussian({length, token_dim}, 0.02, rng);
    e.tag = tag;
    return e;
}

struct PromptPool {
    std::vector<PromptEntry> entries;
    std::size_t prompt_length = 0;
    std::size_t token_dim = 0;
    std::size_t key_dim = 0;

    /// `n` entries with tags assigned round-robin over visual, audio, text,
    /// multimodal.
    static PromptPool create(std::size_t n, std::size_t prompt_length, std::size_t token_dim, std::size_t key_dim,
                             Rng& rng) {
        if (n == 0 || prompt_length == 0 || token_dim == 0 || key_dim == 0)
            throw ConfigError("prompt pool dimensions must be >= 1");
        PromptPool pool{{}, prompt_length, token_dim, key_dim};
        for (std::size_t i = 0; i < n; ++i)
            pool.entries.push_back(
                fresh_entry(key_dim, prompt_length, token_dim, static_cast<PromptTag>(i % kNumTags), rng));
        return pool;
    }

    std::size_t size() const { return entries.size(); }

    std::size_t count_eligible(const TagFilter& filter) const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const PromptEntry& e) {
            return filter[static_cast<std::size_t>(e.tag)];
        }));
    }

    void reset_activation_counts() {
        for (auto& e : entries) e.activation_count = 0;
    }

    /// Restores ‖key‖ ≥ kNormEpsilon after an update.
    void renormalize_keys() {
        for (auto& e : entries) {
            double n = 0.0;
            for (double v : e.key.data) n += v * v;
            n = std::sqrt(n);
            if (n >= kNormEpsilon) continue;
            if (n > 0.0) {
                for (double& v : e.key.data) v /= n;
            } else {
                std::fill(e.key.data.begin(), e.key.data.end(), 0.0);
                e.key.data[0] = 1.0;
            }
        }
    }

    template <class F>
    void for_each_parameter(F&& f) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            f("pool." + std::to_string(i) + ".key", entries[i].key);
            f("pool." + std::to_string(i) + ".value", entries[i].value);
        }
    }
};

/// Selected pool indices, most similar first, with their cosine scores.
struct Selection {
    std::vector<std::size_t> indices;
    std::vector<double> scores;
};

/// Top-k by cosine(query, key) among eligible entries; ties go to the lower
/// index. Does not touch activation counts. When fewer than k entries are
/// eligible, all eligible entries are returned.
inline Selection rank_topk(const PromptPool& pool, std::span<const double> query, std::size_t k,
                           const TagFilter& eligible = kAllTags) {
    if (k > pool.size())
        throw ConfigError("top_k " + std::to_string(k) + " exceeds pool size " + std::to_string(pool.size()));
    if (query.size() != pool.key_dim) throw DimensionError("query width does not match pool key width");
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        const auto& e = pool.entries[j];
        if (!eligible[static_cast<std::size_t>(e.tag)]) continue;
        scored.emplace_back(cosine_similarity(query, e.key.data), j);
    }
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    Selection sel;
    for (std::size_t i = 0; i < take; ++i) {
        sel.indices.push_back(scored[i].second);
        sel.scores.push_back(scored[i].first);
    }
    return sel;
}

/// rank_topk, then counts one activation for each selected entry.
inline Selection select_topk(PromptPool& pool, std::span<const double> query, std::size_t k,
                             const TagFilter& eligible = kAllTags) {
    Selection sel = rank_topk(pool, query, k, eligible);
    for (std::size_t j : sel.indices) ++pool.entries[j].activation_count;
    return sel;
}

namespace detail {
inline void require_distinct(const PromptPool& pool, const std::vector<std::size_t>& indices) {
    std::vector<bool> seen(pool.size(), false);
    for (std::size_t j : indices) {
        if (j >= pool.size()) throw ContractError("prompt index " + std::to_string(j) + " out of range");
        if (seen[j]) throw ContractError("duplicate prompt index " + std::to_string(j));
        seen[j] = true;
    }
}
}  // namespace detail

/// Snapshot of the selected values as a [k x L_p x D] tensor.
inline Tensor gather_values(const PromptPool& pool, const std::vector<std::size_t>& indices) {
    detail::require_distinct(pool, indices);
    Tensor out({indices.size(), pool.prompt_length, pool.token_dim});
    auto it = out.data.begin();
    for (std::size_t j : indices) it = std::copy(pool.entries[j].value.data.begin(), pool.entries[j].value.data.end(), it);
    return out;
}

/// Graph leaves for the selected values, in selection order. Gradients reach
/// only these entries.
inline std::vector<Var> gather_values(Graph& g, PromptPool& pool, const std::vector<std::size_t>& indices) {
    detail::require_distinct(pool, indices);
    std::vector<Var> out;
    out.reserve(indices.size());
    for (std::size_t j : indices) out.push_back(g.leaf(pool.entries[j].value));
    return out;
}

/// Mean over selected entries of (1 − cosine(query, key)).
inline Var key_alignment(Graph& g, Var query, PromptPool& pool, const Selection& sel) {
    if (sel.indices.empty()) return g.constant(Tensor::scalar(0.0));
    std::vector<Var> terms;
    for (std::size_t j : sel.indices) terms.push_back(cosine(query, g.leaf(pool.entries[j].key)));
    Var total = sum(stack_scalars(terms));
    return add_scalar(scale(total, -1.0 / static_cast<double>(terms.size())), 1.0);
}

/// New pool holding copies of entries activated at least `threshold` times,
/// counts reset and tags kept. If `restore_size` exceeds the number copied,
/// fresh multimodal entries drawn from `rng` fill the gap.
inline PromptPool transfer_activated(const PromptPool& source, std::uint64_t threshold,
                                     std::optional<std::size_t> restore_size = std::nullopt, Rng* rng = nullptr) {
    if (threshold < 1) throw ConfigError("transfer threshold must be >= 1");
    PromptPool out{{}, source.prompt_length, source.token_dim, source.key_dim};
    for (const auto& e : source.entries) {
        if (e.activation_count < threshold) continue;
        PromptEntry copy = e;
        copy.activation_count = 0;
        copy.key.grad.clear();
        copy.value.grad.clear();
        out.entries.push_back(std::move(copy));
    }
    if (out.entries.empty())
        throw EmptyTransferError("no prompt reached the activation threshold " + std::to_string(threshold));
    if (restore_size && *restore_size > out.size()) {
        if (!rng) throw ContractError("restoring pool size requires a random generator");
        while (out.size() < *restore_size)
            out.entries.push_back(
                fresh_entry(source.key_dim, source.prompt_length, source.token_dim, PromptTag::multimodal, *rng));
    }
    return out;
}

enum class QueryMapping { identity, linear, mlp };

inline QueryMapping parse_mapping(const std::string& s) {
    if (s == "identity") return QueryMapping::identity;
    if (s == "linear") return QueryMapping::linear;
    if (s == "mlp") return QueryMapping::mlp;
    throw ConfigError("unknown query mapping '" + s + "' (expected identity, linear or mlp)");
}

inline const char* mapping_name(QueryMapping m) {
    switch (m) {
        case QueryMapping::identity: return "identity";
        case QueryMapping::linear: return "linear";
        case QueryMapping::mlp: return "mlp";
    }
    return "?";
}

/// Maps F_fusion into the key space. `linear` starts as the identity map;
/// `mlp` is F → F (ReLU) → F with Glorot weights.
struct QueryMapper {
    QueryMapping kind = QueryMapping::identity;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    static QueryMapper create(QueryMapping kind, std::size_t dim, Rng& rng) {
        QueryMapper q;
        q.kind = kind;
        if (kind == QueryMapping::linear) {
            Tensor w = zeros_param({dim, dim});
            for (std::size_t i = 0; i < dim; ++i) w(i, i) = 1.0;
            q.weights.push_back(std::move(w));
            q.biases.push_back(zeros_param({dim}));
        } else if (kind == QueryMapping::mlp) {
            q.weights.push_back(glorot_uniform(dim, dim, rng));
            q.biases.push_back(zeros_param({dim}));
            q.weights.push_back(glorot_uniform(dim, dim, rng));
            q.biases.push_back(zeros_param({dim}));
        }
        return q;
    }

    Var map(Graph& g, Var fused) {
        Var h = fused;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            h = linear(h, g.leaf(weights[l]), g.leaf(biases[l]));
            if (l + 1 < weights.size()) h = relu(h);
        }
        return h;
    }

    template <class F>
    void for_each_parameter(F&& f) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            f("query." + std::to_string(l) + ".weight", weights[l]);
            f("query." + std::to_string(l) + ".bias", biases[l]);
        }
    }
};

}  // namespace umbe
