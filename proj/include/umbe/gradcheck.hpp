// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference gradient checks. Each suite builds a scalar from a small
// seeded configuration, back-propagates once, then compares every parameter
// coordinate against a central difference.

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "umbe/model.hpp"

namespace umbe {

struct GradcheckOptions {
    double step = 1e-6;
    double tolerance = 1e-5;
    double denominator_floor = 1e-3;
    std::size_t configs = 100;
};

struct SuiteResult {
    std::string suite;
    std::size_t configs = 0;
    std::size_t coordinates = 0;
    double max_rel_error = 0.0;
    std::string worst;  // "<parameter>[<index>] config <n>"
    double seconds = 0.0;
    bool passed = true;
};

/// |a − n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor) {
    const double den = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / den;
}

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;
using LossBuilder = std::function<Var(Graph&)>;

/// Compares analytic and numeric gradients of `build` for every coordinate of
/// `params`, folding the worst error into `out`.
inline void check_coordinates(const NamedParams& params, const LossBuilder& build, const GradcheckOptions& opt,
                              std::size_t config, SuiteResult& out) {
    for (auto& [name, t] : params) t->zero_grad();
    {
        Graph g;
        g.backward(build(g));
    }
    auto eval = [&] {
        Graph g;
        return build(g).item();
    };
    for (auto& [name, t] : params) {
        const std::vector<double> analytic = t->has_grad() ? t->grad : std::vector<double>(t->size(), 0.0);
        for (std::size_t i = 0; i < t->size(); ++i) {
            const double x = t->data[i];
            t->data[i] = x + opt.step;
            const double up = eval();
            t->data[i] = x - opt.step;
            const double down = eval();
            t->data[i] = x;
            const double numeric = (up - down) / (2.0 * opt.step);
            const double err = relative_error(analytic[i], numeric, opt.denominator_floor);
            ++out.coordinates;
            if (err > out.max_rel_error) {
                out.max_rel_error = err;
                out.worst = name + "[" + std::to_string(i) + "] config " + std::to_string(config);
            }
        }
    }
}

namespace detail {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = scale * rng.normal();
    t.requires_grad = true;
    return t;
}

inline Tensor random_const(Shape shape, Rng& rng) {
    Tensor t = random_tensor(std::move(shape), rng);
    t.requires_grad = false;
    return t;
}

inline std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

inline Presence random_presence(Rng& rng) {
    for (;;) {
        Presence p{rng.uniform() < 0.5, rng.uniform() < 0.5, rng.uniform() < 0.5};
        if (present_count(p) > 0) return p;
    }
}

// Projects a tensor output to a scalar through fixed random weights.
inline Var project(Graph& g, Var v, const Tensor& w) { return sum(mul(v, g.constant(w))); }

template <class Body>
SuiteResult run_suite(const std::string& name, std::uint64_t seed, const GradcheckOptions& opt, Body&& body) {
    SuiteResult r;
    r.suite = name;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t c = 0; c < opt.configs; ++c) {
        Rng rng(seed * 1000003ULL + c);
        body(rng, c, r);
        ++r.configs;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.passed = r.max_rel_error < opt.tolerance;
    return r;
}

}  // namespace detail

/// Every differentiable primitive, one randomly shaped instance per config.
inline SuiteResult gradcheck_primitives(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("primitives", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const std::size_t m = between(rng, 1, 4), k = between(rng, 1, 4), n = between(rng, 1, 4);
        Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng), a2 = random_tensor({m, k}, rng);
        Tensor w = random_tensor({n, k}, rng), bias = random_tensor({n}, rng);
        Tensor v1 = random_tensor({k}, rng), v2 = random_tensor({k}, rng);
        Tensor sq = random_tensor({3, 3}, rng);
        Tensor rmk = random_const({m, k}, rng), rmn = random_const({m, n}, rng), rkm = random_const({k, m}, rng);
        Tensor r33 = random_const({3, 3}, rng), rrow = random_const({1, k}, rng), r2k = random_const({2 * m, k}, rng);
        Tensor rsel = random_const({1, k}, rng);
        ModalMask mask = build_mask(random_presence(rng));
        const std::size_t label = rng.below(k);
        NamedParams params{{"a", &a}, {"b", &b}, {"a2", &a2}, {"w", &w}, {"bias", &bias}, {"v1", &v1}, {"v2", &v2}, {"sq", &sq}};
        auto build = [&](Graph& g) {
            Var A = g.leaf(a), B = g.leaf(b), A2 = g.leaf(a2);
            std::vector<Var> terms{
                project(g, matmul(A, B), rmn),
                project(g, transpose(A), rkm),
                project(g, linear(A, g.leaf(w), g.leaf(bias)), rmn),
                project(g, add(A, A2), rmk),
                project(g, mul(A, A2), rmk),
                project(g, neg(scale(A, 0.7)), rmk),
                project(g, add_scalar(A2, 0.3), rmk),
                project(g, relu(A), rmk),
                project(g, sigmoid(A2), rmk),
                scale(abs_sum(A), 0.1),
                project(g, mean_rows(A2), rrow),
                project(g, concat_rows({A, A2}), r2k),
                project(g, select_rows(A2, {m - 1}), rsel),
                project(g, softmax_rows(add_mask(g.leaf(sq), mask.logits)), r33),
                cosine(g.leaf(v1), g.leaf(v2)),
                softmax_cross_entropy(g.leaf(v1), label),
            };
            return sum(stack_scalars(terms));
        };
        check_coordinates(params, build, opt, c, r);
    });
}

/// A d → h → h → F encoder on a fixed input.
inline SuiteResult gradcheck_encoder(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("encoder", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const std::size_t d = between(rng, 1, 5), h = between(rng, 1, 6), f = between(rng, 1, 4);
        Mlp mlp({d, h, h, f}, rng);
        for (auto& b : mlp.biases)
            for (double& v : b.data) v = 0.1 * rng.normal();
        Tensor x = random_const({1, d}, rng), proj = random_const({1, f}, rng);
        NamedParams params;
        mlp.for_each_parameter("enc", [&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
        check_coordinates(params, [&](Graph& g) { return project(g, mlp.forward(g, g.constant(x)), proj); }, opt, c, r);
    });
}

/// Masked attention over three tokens under a random presence pattern; the
/// tokens themselves are also checked.
inline SuiteResult gradcheck_fusion(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("fusion", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const std::size_t f = between(rng, 1, 5);
        FusionParams fp = FusionParams::init(f, rng);
        std::array<Tensor, kNumModalities> tok{random_tensor({1, f}, rng), random_tensor({1, f}, rng),
                                               random_tensor({1, f}, rng)};
        const Presence p = random_presence(rng);
        Tensor proj = random_const({1, f}, rng);
        NamedParams params{{"token.V", &tok[0]}, {"token.A", &tok[1]}, {"token.T", &tok[2]}};
        fp.for_each_parameter([&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
        auto build = [&](Graph& g) {
            EncodedSample e;
            e.presence = p;
            for (std::size_t m = 0; m < kNumModalities; ++m) e.features[m] = g.leaf(tok[m]);
            return project(g, adaptive_fusion(g, e, build_mask(p), fp).fused, proj);
        };
        check_coordinates(params, build, opt, c, r);
    });
}

/// Query mapping (linear and mlp alternate) followed by the key-alignment
/// term against a fixed selection.
inline SuiteResult gradcheck_query(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("query_mapping", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const std::size_t f = between(rng, 2, 5);
        QueryMapper q = QueryMapper::create(c % 2 ? QueryMapping::mlp : QueryMapping::linear, f, rng);
        q.for_each_parameter([&](const std::string&, Tensor& t) {
            for (double& v : t.data) v += 0.2 * rng.normal();
        });
        PromptPool pool = PromptPool::create(between(rng, 2, 5), 1, 1, f, rng);
        Tensor fused = random_tensor({1, f}, rng), proj = random_const({1, f}, rng);
        Selection sel = rank_topk(pool, fused.data, between(rng, 1, pool.size()), kAllTags);
        NamedParams params{{"fused", &fused}};
        q.for_each_parameter([&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
        for (std::size_t j : sel.indices) params.emplace_back("pool." + std::to_string(j) + ".key", &pool.entries[j].key);
        auto build = [&](Graph& g) {
            Var query = q.map(g, g.leaf(fused));
            return add(project(g, query, proj), key_alignment(g, query, pool, sel));
        };
        check_coordinates(params, build, opt, c, r);
    });
}

/// Sparse gate over the concatenated selection plus its L1 term.
inline SuiteResult gradcheck_sff(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("sff_l1", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const std::size_t d = between(rng, 1, 4), hidden = between(rng, 1, 5), len = between(rng, 1, 3);
        const std::size_t k = between(rng, 1, 3);
        SparseGate gate = SparseGate::create(d, hidden, 0.01 * static_cast<double>(1 + rng.below(10)), rng);
        for (double& v : gate.b1.data) v = 0.1 * rng.normal();
        std::vector<Tensor> values;
        for (std::size_t j = 0; j < k; ++j) values.push_back(random_tensor({len, d}, rng));
        Tensor proj = random_const({k * len, d}, rng);
        NamedParams params;
        gate.for_each_parameter([&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
        for (std::size_t j = 0; j < k; ++j) params.emplace_back("value." + std::to_string(j), &values[j]);
        auto build = [&](Graph& g) {
            std::vector<Var> sel;
            for (auto& v : values) sel.push_back(g.leaf(v));
            return add(project(g, *sparse_feature_fusion(g, sel, gate), proj), l1_penalty(g, gate));
        };
        check_coordinates(params, build, opt, c, r);
    });
}

/// Class scores and the contrastive loss.
inline SuiteResult gradcheck_objective(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("scores_contrastive", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const std::size_t f = between(rng, 1, 4), d = between(rng, 1, 4), classes = between(rng, 2, 5);
        const std::size_t len = between(rng, 1, 3);
        PromptEncoder ep = PromptEncoder::create(f, d, rng);
        for (double& v : ep.bias.data) v = 0.1 * rng.normal();
        Tensor fused = random_tensor({1, f}, rng);
        std::vector<Tensor> prompts;
        for (std::size_t j = 0; j < classes; ++j) prompts.push_back(random_tensor({len, d}, rng));
        const std::size_t label = rng.below(classes);
        const double tau = 0.05 + 0.5 * rng.uniform();
        NamedParams params{{"fused", &fused}};
        ep.for_each_parameter([&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
        for (std::size_t j = 0; j < classes; ++j) params.emplace_back("prompt." + std::to_string(j), &prompts[j]);
        auto build = [&](Graph& g) {
            std::vector<Var> comb;
            for (auto& p : prompts) comb.push_back(g.leaf(p));
            return contrastive_loss(class_scores(g, g.leaf(fused), comb, ep, tau), label);
        };
        check_coordinates(params, build, opt, c, r);
    });
}

/// Tiny model configuration used by the composite suite.
inline ModelConfig tiny_model_config(Rng& rng, std::uint64_t seed) {
    ModelConfig mc;
    mc.num_classes = detail::between(rng, 2, 4);
    mc.input_dims = {detail::between(rng, 3, 5), detail::between(rng, 2, 3), detail::between(rng, 1, 3)};
    mc.feature_dim = detail::between(rng, 2, 4);
    mc.anchor_hidden = 4;
    mc.pool_size = detail::between(rng, 2, 5);
    mc.prompt_length = detail::between(rng, 1, 2);
    mc.top_k = detail::between(rng, 1, mc.pool_size);
    mc.inherent_length = detail::between(rng, 1, 2);
    mc.gate_hidden = detail::between(rng, 1, 4);
    mc.mapping = static_cast<QueryMapping>(rng.below(3));
    mc.lambda = 0.01;
    mc.seed = seed;
    return mc;
}

/// Encoders → fusion → query → pool selection (frozen) → gate → scores →
/// contrastive + β·key alignment + λ·L1, over every model parameter.
inline SuiteResult gradcheck_composite(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    using namespace detail;
    return run_suite("composite", seed, opt, [&](Rng& rng, std::size_t c, SuiteResult& r) {
        const ModelConfig mc = tiny_model_config(rng, rng.next());
        UmbeModel model = UmbeModel::create(mc);
        model.for_each_parameter([&](const std::string&, Tensor& t) {
            for (double& v : t.data) v += 0.1 * rng.normal();
        });
        ModalitySample s;
        s.label = rng.below(mc.num_classes);
        const Presence p = random_presence(rng);
        for (std::size_t m = 0; m < kNumModalities; ++m)
            if (p[m]) {
                std::vector<double> x(mc.input_dims[m]);
                for (double& v : x) v = rng.normal();
                s.features[m] = std::move(x);
            }
        Selection sel;
        {
            Graph g;
            sel = model.forward(g, s).selection;
        }
        ForwardOptions fo;
        fo.fixed_selection = &sel;
        check_coordinates(model.parameters(),
                          [&](Graph& g) { return add(model.forward(g, s, fo).sample_loss, l1_penalty(g, model.gate)); },
                          opt, c, r);
    });
}

/// All suites in order.
inline std::vector<SuiteResult> run_gradcheck(std::uint64_t seed, const GradcheckOptions& opt = {}) {
    return {gradcheck_primitives(seed, opt), gradcheck_encoder(seed, opt), gradcheck_fusion(seed, opt),
            gradcheck_query(seed, opt),      gradcheck_sff(seed, opt),     gradcheck_objective(seed, opt),
            gradcheck_composite(seed, opt)};
}

}  // namespace umbe
