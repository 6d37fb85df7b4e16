// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "umbe/gradcheck.hpp"
#include "umbe/objective.hpp"

using namespace umbe;

namespace {

double lse_oracle(const std::vector<double>& s, std::size_t label) {
    double mx = s[0];
    for (double v : s) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : s) z += std::exp(v - mx);
    return mx + std::log(z) - s[label];
}

double contrast(const std::vector<double>& s, std::size_t label) {
    Graph g;
    return contrastive_loss(g.constant(Tensor(Shape{s.size()}, s)), label).item();
}

}  // namespace

TEST(ClassScores, SelfMatchIsMaximal) {
    Rng rng(1);
    PromptEncoder ep = PromptEncoder::create(3, 3, rng);
    ep.weight = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    std::fill(ep.bias.data.begin(), ep.bias.data.end(), 0.0);
    Tensor fused = Tensor::row({0.3, -1.2, 2.0});
    // class 1's prompt rows average to the fused vector
    Tensor p0 = Tensor::matrix({{1, 1, 1}}), p1 = Tensor::matrix({{0.6, -2.4, 4.0}, {0.0, 0.0, 0.0}});
    Graph g;
    Var s = class_scores(g, g.constant(fused), {g.constant(p0), g.constant(p1)}, ep, 1.0);
    EXPECT_NEAR(s.value().data[1], 1.0, 1e-15);
    EXPECT_LT(s.value().data[0], 1.0);
}

TEST(ClassScores, IdenticalEncodingsGiveUniformScoresAndClassZero) {
    Rng rng(2);
    PromptEncoder ep = PromptEncoder::create(4, 3, rng);
    Tensor p = Tensor::matrix({{1, 2, 3}, {0, -1, 2}});
    Graph g;
    Var f = g.constant(Tensor::row({1, -1, 0.5, 2}));
    Var s = class_scores(g, f, {g.constant(p), g.constant(p), g.constant(p)}, ep, 0.07);
    EXPECT_EQ(s.value().data[0], s.value().data[1]);
    EXPECT_EQ(s.value().data[1], s.value().data[2]);
    EXPECT_EQ(predict(s.value().data), 0u);
}

TEST(ClassScores, MatchesStandaloneCosine) {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t f = 1 + rng.below(5), d = 1 + rng.below(5), c = 2 + rng.below(5);
        PromptEncoder ep = PromptEncoder::create(f, d, rng);
        for (double& v : ep.bias.data) v = rng.normal();
        std::vector<double> fv(f);
        for (double& v : fv) v = rng.normal();
        std::vector<Tensor> prompts;
        for (std::size_t k = 0; k < c; ++k) {
            Tensor t({2, d});
            for (double& v : t.data) v = rng.normal();
            prompts.push_back(t);
        }
        const double tau = 0.07;
        Graph g;
        std::vector<Var> comb;
        for (auto& p : prompts) comb.push_back(g.constant(p));
        const auto s = class_scores(g, g.constant(Tensor::row(fv)), comb, ep, tau).value().data;
        for (std::size_t k = 0; k < c; ++k) {
            std::vector<double> e(f);
            for (std::size_t o = 0; o < f; ++o) {
                e[o] = ep.bias.data[o];
                for (std::size_t i = 0; i < d; ++i) e[o] += ep.weight(o, i) * 0.5 * (prompts[k](0, i) + prompts[k](1, i));
            }
            double dot = 0, na = 0, nb = 0;
            for (std::size_t o = 0; o < f; ++o) {
                dot += fv[o] * e[o];
                na += fv[o] * fv[o];
                nb += e[o] * e[o];
            }
            EXPECT_NEAR(s[k], dot / std::sqrt(na * nb) / tau, 1e-10);
            EXPECT_LE(std::abs(s[k]), 1.0 / tau + 1e-12);
        }
    }
}

TEST(ClassScores, DegenerateEncodingIsError) {
    Rng rng(4);
    PromptEncoder ep = PromptEncoder::create(2, 2, rng);
    std::fill(ep.weight.data.begin(), ep.weight.data.end(), 0.0);
    Graph g;
    EXPECT_THROW(class_scores(g, g.constant(Tensor::row({1, 1})), {g.constant(Tensor::matrix({{1, 1}}))}, ep, 1.0),
                 DegenerateError);
    EXPECT_THROW(class_scores(g, g.constant(Tensor::row({1, 1})), {g.constant(Tensor::matrix({{1, 1}}))}, ep, 0.0),
                 ConfigError);
}

TEST(Contrastive, UniformScoresGiveLnC) {
    for (std::size_t c : {2u, 7u, 11u}) EXPECT_NEAR(contrast(std::vector<double>(c, 0.37), 1), std::log(double(c)), 1e-12);
    EXPECT_NEAR(contrast(std::vector<double>(7, 0.0), 3), 1.9459101490553132, 1e-12);
}

TEST(Contrastive, SaturatedLabel) {
    std::vector<double> s(7, 0.0);
    s[2] = 30.0;
    EXPECT_LT(contrast(s, 2), 1e-9);
}

TEST(Contrastive, MatchesLogSumExpAndShiftInvariant) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(7);
        for (double& v : s) v = 5.0 * rng.normal();
        const std::size_t label = rng.below(7);
        EXPECT_NEAR(contrast(s, label), lse_oracle(s, label), 1e-12);
        const double shift = 10.0 * rng.normal();
        std::vector<double> t = s;
        for (double& v : t) v += shift;
        EXPECT_NEAR(contrast(t, label), contrast(s, label), 1e-12);
    }
}

TEST(Contrastive, BoundsAndArgmaxConsistency) {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(5);
        for (double& v : s) v = rng.normal();
        const double spread = *std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end());
        std::size_t best = 0;
        for (std::size_t c = 0; c < 5; ++c) {
            const double l = contrast(s, c);
            EXPECT_GE(l, 0.0);
            EXPECT_LE(l, std::log(5.0) + spread);
            if (l < contrast(s, best)) best = c;
        }
        EXPECT_EQ(best, predict(s));
    }
}

TEST(TotalLoss, Reductions) {
    Graph g;
    Var c = g.constant(Tensor::scalar(1.25));
    EXPECT_EQ(total_loss(c, g.constant(Tensor::scalar(0.0)), g.constant(Tensor::scalar(0.8)), 0.0).item(), 1.25);
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.normal(), l1 = rng.uniform(), ka = rng.uniform(), beta = rng.uniform();
        Graph h;
        EXPECT_NEAR(total_loss(h.constant(Tensor::scalar(a)), h.constant(Tensor::scalar(l1)),
                               h.constant(Tensor::scalar(ka)), beta)
                        .item(),
                    a + l1 + beta * ka, 1e-15);
    }
    EXPECT_THROW(total_loss(c, c, c, -1.0), ConfigError);
}

TEST(Objective, GradientsMatchFiniteDifferences) {
    const SuiteResult r = gradcheck_objective(7);
    EXPECT_TRUE(r.passed) << r.max_rel_error << " at " << r.worst;
    const SuiteResult comp = gradcheck_composite(7);
    EXPECT_TRUE(comp.passed) << comp.max_rel_error << " at " << comp.worst;
}
