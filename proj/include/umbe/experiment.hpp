// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Dataset-driven runs shared by the CLI: training plans and the pool
// length/size/top-k ablation sweep.

#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "umbe/config.hpp"
#include "umbe/dataset.hpp"
#include "umbe/evaluation.hpp"
#include "umbe/training.hpp"

namespace umbe {

enum class StagePlan { stage1, stage2, both };

inline StagePlan parse_stage_plan(const std::string& s) {
    if (s == "1") return StagePlan::stage1;
    if (s == "2") return StagePlan::stage2;
    if (s == "both") return StagePlan::both;
    throw ConfigError("--stage must be 1, 2 or both, got '" + s + "'");
}

/// Input widths and class count always come from the data.
inline ModelConfig fit_to_data(ModelConfig mc, const Dataset& ds) {
    mc.num_classes = ds.num_classes;
    mc.input_dims = ds.dims;
    return mc;
}

struct TrainOutcome {
    Session session;
    std::vector<StageResult> stages;
};

/// stage1: stage 1 only. both: stage 1 then stage 2. stage2: stage 2 from
/// `init` (a stage-1 session); without one, dropout training with no
/// transfer.
inline TrainOutcome train_plan(const ModelConfig& mc, const TrainConfig& tc, const Dataset& ds, StagePlan plan,
                               std::optional<Session> init = std::nullopt) {
    auto [train, val] = split_validation(ds.train, ds.val, tc.val_fraction, tc.seed);
    TrainOutcome out{init ? std::move(*init) : Session::create(fit_to_data(mc, ds), tc), {}};
    Session& s = out.session;
    if (init) s.train_config = tc;
    if (s.model.config.num_classes != ds.num_classes || s.model.config.input_dims != ds.dims)
        throw ConfigError("initial checkpoint does not match the dataset's classes or feature widths");
    switch (plan) {
        case StagePlan::stage1: out.stages.push_back(stage1_train(s, train, val)); break;
        case StagePlan::both:
            out.stages.push_back(stage1_train(s, train, val));
            out.stages.push_back(stage2_train(s, train, val));
            break;
        case StagePlan::stage2:
            out.stages.push_back(init ? stage2_train(s, train, val) : single_stage_train(s, train, val));
            break;
    }
    return out;
}

struct AblationRow {
    std::size_t length = 0, size = 0, topk = 0;
    double uar_one = 0.0, war_one = 0.0;
    double uar_two = 0.0, war_two = 0.0;
    double delta_uar() const { return uar_two - uar_one; }
    double delta_war() const { return war_two - war_one; }
};

/// One-stage and two-stage runs for every grid cell, same seed and data,
/// scored on the test split with every modality present.
inline std::vector<AblationRow> run_ablation(const ModelConfig& base, const TrainConfig& tc, const Dataset& ds,
                                             const AblationGrid& grid) {
    if (ds.test.empty()) throw ConfigError("ablation needs a non-empty test split");
    std::vector<AblationRow> rows;
    const Presence all{true, true, true};
    for (std::size_t len : grid.lengths)
        for (std::size_t size : grid.sizes)
            for (std::size_t k : grid.topks) {
                ModelConfig mc = base;
                mc.prompt_length = len;
                mc.pool_size = size;
                mc.top_k = k;
                mc.validate();
                AblationRow row{len, size, k};
                {
                    TrainOutcome one = train_plan(mc, tc, ds, StagePlan::stage2);
                    const EvalReport r = eval_missing(one.session.model, ds.test, all);
                    row.uar_one = r.uar;
                    row.war_one = r.war;
                }
                {
                    TrainOutcome two = train_plan(mc, tc, ds, StagePlan::both);
                    const EvalReport r = eval_missing(two.session.model, ds.test, all);
                    row.uar_two = r.uar;
                    row.war_two = r.war;
                }
                rows.push_back(row);
            }
    return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "length,size,topk,uar_1stage,war_1stage,uar_2stage,war_2stage,delta_uar,delta_war\n";
    for (const auto& r : rows)
        os << r.length << "," << r.size << "," << r.topk << "," << r.uar_one << "," << r.war_one << "," << r.uar_two
           << "," << r.war_two << "," << r.delta_uar() << "," << r.delta_war() << "\n";
    return os.str();
}

}  // namespace umbe
