// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "umbe/tensor.hpp"

namespace umbe {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;  // steps already taken
};

/// One bias-corrected Adam update at step `t` (1-based).
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& mom, double lr,
                      const AdamHyper& h, std::uint64_t t) {
    if (params.size() != grads.size())
        throw ContractError("adam_step: parameter/gradient length mismatch (" + std::to_string(params.size()) +
                            " vs " + std::to_string(grads.size()) + ")");
    if (t < 1) throw ContractError("adam_step: step index must be >= 1");
    if (mom.m.empty()) {
        mom.m.assign(params.size(), 0.0);
        mom.v.assign(params.size(), 0.0);
    }
    if (mom.m.size() != params.size() || mom.v.size() != params.size())
        throw ContractError("adam_step: moment length mismatch");
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        mom.m[i] = h.beta1 * mom.m[i] + (1.0 - h.beta1) * g;
        mom.v[i] = h.beta2 * mom.v[i] + (1.0 - h.beta2) * g * g;
        const double mhat = mom.m[i] / c1;
        const double vhat = mom.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + h.eps);
    }
    mom.t = t;
}

/// Adam over named tensors. Tensors without a gradient this step are left
/// untouched, moments included.
class Adam {
public:
    AdamHyper hyper;
    std::map<std::string, AdamMoments> state;

    template <class Params>
    void step(Params&& named, double lr) {
        for (auto& [name, tensor] : named) {
            if (!tensor->has_grad()) continue;
            AdamMoments& mom = state[name];
            adam_step(tensor->data, tensor->grad, mom, lr, hyper, mom.t + 1);
        }
    }

    void reset() { state.clear(); }
};

enum class StepDecision { proceed, stop_lr_floor, stop_accuracy };

inline const char* decision_name(StepDecision d) {
    switch (d) {
        case StepDecision::proceed: return "continue";
        case StepDecision::stop_lr_floor: return "stop(lr_floor)";
        case StepDecision::stop_accuracy: return "stop(acc)";
    }
    return "?";
}

/// Plateau schedule settings.
struct ScheduleConfig {
    double lr_init = 0.002;
    double lr_decay = 0.6;
    std::size_t patience_epochs = 3;
    double lr_floor = 1e-7;
    double train_acc_stop = 0.80;
    double improve_epsilon = 1e-4;
};

struct TrainState {
    std::size_t epoch = 0;
    double lr = 0.002;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_improvement = 0;
    int stage = 1;
    std::string rng_state;
};

/// End-of-epoch update: track the best validation loss, decay the rate after
/// `patience_epochs` epochs without an improvement larger than
/// `improve_epsilon`, and report whether training should stop.
inline StepDecision lr_step(TrainState& s, double val_loss, const ScheduleConfig& cfg,
                            std::optional<double> train_accuracy = std::nullopt) {
    if (!std::isfinite(val_loss)) throw ContractError("validation loss must be finite");
    ++s.epoch;
    if (val_loss < s.best_val_loss - cfg.improve_epsilon) {
        s.best_val_loss = val_loss;
        s.epochs_since_improvement = 0;
    } else {
        ++s.epochs_since_improvement;
        if (s.epochs_since_improvement >= cfg.patience_epochs) {
            s.lr *= cfg.lr_decay;
            s.epochs_since_improvement = 0;
        }
    }
    if (s.lr < cfg.lr_floor) return StepDecision::stop_lr_floor;
    if (train_accuracy && *train_accuracy > cfg.train_acc_stop) return StepDecision::stop_accuracy;
    return StepDecision::proceed;
}

}  // namespace umbe
