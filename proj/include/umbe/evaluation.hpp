// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "umbe/metrics.hpp"
#include "umbe/model.hpp"

namespace umbe {

/// Confusion matrix of `model` over `samples` with `pattern` forced on every
/// sample.
inline ConfusionMatrix confusion_under_pattern(UmbeModel& model, const std::vector<ModalitySample>& samples,
                                               const Presence& pattern) {
    if (present_count(pattern) == 0) throw DegenerateError("evaluation pattern has no modality present");
    ConfusionMatrix cm(model.config.num_classes);
    for (const auto& s : samples) cm.add(s.label, model.predict(s.restricted(pattern)).first);
    return cm;
}

/// Evaluates under a presence pattern. With `class_subset`, samples of other
/// classes are dropped and the matrix is cut down to the retained rows and
/// columns before computing metrics.
inline EvalReport eval_missing(UmbeModel& model, const std::vector<ModalitySample>& samples, const Presence& pattern,
                               const std::optional<std::vector<std::size_t>>& class_subset = std::nullopt,
                               const std::vector<std::string>& class_names = {}) {
    const std::size_t c = model.config.num_classes;
    std::vector<std::string> names = class_names.empty() ? std::vector<std::string>{} : class_names;
    if (names.empty())
        for (std::size_t i = 0; i < c; ++i) names.push_back("class_" + std::to_string(i));
    if (names.size() != c) throw ContractError("class name count does not match the model's class count");

    std::vector<std::size_t> retained;
    if (class_subset) {
        std::vector<bool> seen(c, false);
        for (std::size_t k : *class_subset) {
            if (k >= c) throw ConfigError("class subset index " + std::to_string(k) + " out of range");
            if (seen[k]) throw ConfigError("class subset repeats class " + std::to_string(k));
            seen[k] = true;
            retained.push_back(k);
        }
        if (retained.empty()) throw ConfigError("class subset is empty");
    } else {
        for (std::size_t i = 0; i < c; ++i) retained.push_back(i);
    }

    std::vector<bool> keep(c, false);
    for (std::size_t k : retained) keep[k] = true;
    std::vector<ModalitySample> kept;
    for (const auto& s : samples)
        if (s.label < c && keep[s.label]) kept.push_back(s);

    EvalReport r;
    r.presence = pattern;
    r.class_subset = class_subset;
    r.confusion = confusion_under_pattern(model, kept, pattern).restricted(retained);
    for (std::size_t k : retained) r.class_names.push_back(names[k]);
    const Metrics m = metrics(r.confusion);
    r.war = m.war;
    r.uar = m.uar;
    r.per_class_recall = m.per_class_recall;
    return r;
}

/// Machine-readable report. `metadata` is free-form and is the only place
/// for run-specific values such as timestamps.
inline nlohmann::json report_json(const EvalReport& r, const std::string& checkpoint_hash,
                                  const nlohmann::json& metadata = nlohmann::json::object()) {
    nlohmann::json j;
    j["war"] = r.war;
    j["uar"] = r.uar;
    j["recalls"] = r.per_class_recall;
    j["classes"] = r.class_names;
    j["pattern"] = pattern_string(r.presence);
    j["subset"] = r.class_subset ? nlohmann::json(*r.class_subset) : nlohmann::json(nullptr);
    j["checkpoint_hash"] = checkpoint_hash;
    j["confusion"] = nlohmann::json::array();
    for (std::size_t t = 0; t < r.confusion.num_classes; ++t) {
        std::vector<std::uint64_t> row;
        for (std::size_t p = 0; p < r.confusion.num_classes; ++p) row.push_back(r.confusion.at(t, p));
        j["confusion"].push_back(row);
    }
    j["metadata"] = metadata;
    return j;
}

}  // namespace umbe
