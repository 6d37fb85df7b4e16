// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "umbe/graph.hpp"
#include "umbe/rng.hpp"

namespace umbe {

enum class Modality : std::size_t { visual = 0, audio = 1, text = 2 };
inline constexpr std::array<Modality, 3> kModalities{Modality::visual, Modality::audio, Modality::text};
inline constexpr std::size_t kNumModalities = 3;

inline const char* modality_name(Modality m) {
    switch (m) {
        case Modality::visual: return "visual";
        case Modality::audio: return "audio";
        case Modality::text: return "text";
    }
    return "?";
}

inline std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

/// Presence flags in (visual, audio, text) order.
using Presence = std::array<bool, kNumModalities>;

inline std::size_t present_count(const Presence& p) { return std::size_t(p[0]) + p[1] + p[2]; }

inline Presence only(Modality m) {
    Presence p{false, false, false};
    p[index_of(m)] = true;
    return p;
}

/// One example: optional per-modality feature vectors and a class label.
/// Presence is derived from which vectors are set.
struct ModalitySample {
    std::array<std::optional<std::vector<double>>, kNumModalities> features;
    std::size_t label = 0;

    Presence presence() const {
        return {features[0].has_value(), features[1].has_value(), features[2].has_value()};
    }

    void validate(std::size_t num_classes) const {
        if (present_count(presence()) == 0) throw DegenerateError("sample has no modality present");
        if (label >= num_classes)
            throw ContractError("label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    }

    /// Copy keeping only the modalities flagged in `p`.
    ModalitySample restricted(const Presence& p) const {
        ModalitySample out;
        out.label = label;
        for (std::size_t m = 0; m < kNumModalities; ++m) {
            if (!p[m]) continue;
            if (!features[m])
                throw ContractError(std::string("requested modality ") + modality_name(kModalities[m]) +
                                    " is missing from the sample");
            out.features[m] = features[m];
        }
        return out;
    }
};

/// Fully connected net with ReLU hidden layers and a linear output layer.
struct Mlp {
    std::vector<Tensor> weights;  // [out x in]
    std::vector<Tensor> biases;

    Mlp() = default;
    Mlp(const std::vector<std::size_t>& widths, Rng& rng) {
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            weights.push_back(glorot_uniform(widths[l + 1], widths[l], rng));
            biases.push_back(zeros_param({widths[l + 1]}));
        }
    }

    std::size_t in_dim() const { return weights.front().shape[1]; }
    std::size_t out_dim() const { return weights.back().shape[0]; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }

    Var forward(Graph& g, Var x) {
        Var h = x;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            h = linear(h, g.leaf(weights[l]), g.leaf(biases[l]));
            if (l + 1 < weights.size()) h = relu(h);
        }
        return h;
    }

    template <class F>
    void for_each_parameter(const std::string& prefix, F&& f) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            f(prefix + "." + std::to_string(l) + ".weight", weights[l]);
            f(prefix + "." + std::to_string(l) + ".bias", biases[l]);
        }
    }
};

/// Parameters of a d → h → h → F encoder.
inline std::size_t encoder_parameter_count(std::size_t d, std::size_t h, std::size_t f) {
    return d * h + h + h * h + h + h * f + f;
}

/// Per-modality encoders with deliberately unequal parameter budgets.
struct EncoderStack {
    std::array<Mlp, kNumModalities> encoders;
    std::array<double, kNumModalities> budget{};
    std::array<std::size_t, kNumModalities> hidden{};
    std::size_t feature_dim = 0;

    std::array<std::size_t, kNumModalities> parameter_counts() const {
        return {encoders[0].parameter_count(), encoders[1].parameter_count(), encoders[2].parameter_count()};
    }

    std::array<double, kNumModalities> parameter_shares() const {
        const auto c = parameter_counts();
        const double total = static_cast<double>(c[0] + c[1] + c[2]);
        return {c[0] / total, c[1] / total, c[2] / total};
    }

    std::size_t input_dim(Modality m) const { return encoders[index_of(m)].in_dim(); }

    template <class F>
    void for_each_parameter(F&& f) {
        for (Modality m : kModalities)
            encoders[index_of(m)].for_each_parameter(std::string("encoder.") + modality_name(m), f);
    }
};

inline constexpr std::array<double, kNumModalities> kDefaultBudget{0.55, 0.38, 0.07};
inline constexpr double kBudgetTolerance = 0.10;

namespace detail {

// Closest h ≥ 1 with encoder_parameter_count(d, h, f) ≈ target.
inline std::size_t hidden_for_target(std::size_t d, std::size_t f, double target) {
    const double b = static_cast<double>(d + f + 2);
    const double c = static_cast<double>(f) - target;
    const double disc = b * b - 4.0 * c;
    const double root = disc > 0 ? (-b + std::sqrt(disc)) / 2.0 : 1.0;
    std::size_t best = 1;
    double best_err = std::abs(static_cast<double>(encoder_parameter_count(d, 1, f)) - target);
    const std::size_t lo = root > 2 ? static_cast<std::size_t>(std::floor(root)) - 1 : 1;
    for (std::size_t h = lo; h <= lo + 3; ++h) {
        const double err = std::abs(static_cast<double>(encoder_parameter_count(d, h, f)) - target);
        if (err < best_err) {
            best = h;
            best_err = err;
        }
    }
    return best;
}

}  // namespace detail

/// Builds encoders whose parameter shares follow `budget`. The modality with
/// the largest share gets `anchor_hidden` units per hidden layer (grown if the
/// smaller encoders cannot meet their shares); the others are sized to match.
inline EncoderStack build_encoders(std::size_t d_v, std::size_t d_a, std::size_t d_t, std::size_t feature_dim,
                                   std::array<double, kNumModalities> budget, std::uint64_t seed,
                                   std::size_t anchor_hidden = 64) {
    const std::array<std::size_t, kNumModalities> dims{d_v, d_a, d_t};
    for (std::size_t d : dims)
        if (d == 0) throw ConfigError("encoder input width must be >= 1");
    if (feature_dim == 0) throw ConfigError("feature width must be >= 1");
    double s = 0.0;
    for (double b : budget) {
        if (!(b > 0.0)) throw ConfigError("encoder budget entries must be positive");
        s += b;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("encoder budget must sum to 1, got " + std::to_string(s));

    std::size_t anchor = 0;
    for (std::size_t m = 1; m < kNumModalities; ++m)
        if (budget[m] > budget[anchor]) anchor = m;

    std::array<std::size_t, kNumModalities> hidden{};
    bool ok = false;
    for (std::size_t h = std::max<std::size_t>(anchor_hidden, 1); h <= 4096 && !ok; h += std::max<std::size_t>(h / 8, 1)) {
        hidden[anchor] = h;
        const double total = encoder_parameter_count(dims[anchor], h, feature_dim) / budget[anchor];
        for (std::size_t m = 0; m < kNumModalities; ++m)
            if (m != anchor) hidden[m] = detail::hidden_for_target(dims[m], feature_dim, budget[m] * total);
        double sum = 0.0;
        std::array<double, kNumModalities> counts{};
        for (std::size_t m = 0; m < kNumModalities; ++m) {
            counts[m] = static_cast<double>(encoder_parameter_count(dims[m], hidden[m], feature_dim));
            sum += counts[m];
        }
        ok = true;
        for (std::size_t m = 0; m < kNumModalities; ++m)
            if (std::abs(counts[m] / sum - budget[m]) > kBudgetTolerance) ok = false;
    }
    if (!ok) throw ConfigError("no encoder widths satisfy the parameter budget for these input widths");

    Rng rng(seed);
    EncoderStack stack;
    stack.budget = budget;
    stack.hidden = hidden;
    stack.feature_dim = feature_dim;
    for (std::size_t m = 0; m < kNumModalities; ++m)
        stack.encoders[m] = Mlp({dims[m], hidden[m], hidden[m], feature_dim}, rng);
    return stack;
}

/// Encoder outputs for one sample: one 1×F token per modality. Absent
/// modalities hold a constant placeholder (zeros unless overridden).
struct EncodedSample {
    std::array<Var, kNumModalities> features;
    Presence presence{};
};

using Placeholders = std::array<std::optional<std::vector<double>>, kNumModalities>;

inline EncodedSample encode(Graph& g, const ModalitySample& sample, EncoderStack& enc,
                            const Placeholders& placeholders = {}) {
    EncodedSample out;
    out.presence = sample.presence();
    if (present_count(out.presence) == 0) throw DegenerateError("sample has no modality present");
    const std::size_t f = enc.feature_dim;
    for (std::size_t m = 0; m < kNumModalities; ++m) {
        if (sample.features[m]) {
            const auto& x = *sample.features[m];
            if (x.size() != enc.encoders[m].in_dim())
                throw ConfigError(std::string(modality_name(kModalities[m])) + " input width " +
                                  std::to_string(x.size()) + " does not match encoder width " +
                                  std::to_string(enc.encoders[m].in_dim()));
            out.features[m] = enc.encoders[m].forward(g, g.constant(Tensor::row(x)));
        } else {
            std::vector<double> fill = placeholders[m].value_or(std::vector<double>(f, 0.0));
            if (fill.size() != f) throw DimensionError("placeholder width must equal the feature width");
            out.features[m] = g.constant(Tensor::row(std::move(fill)));
        }
    }
    return out;
}

}  // namespace umbe
