// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "umbe/gradcheck.hpp"
#include "umbe/graph.hpp"
#include "umbe/rng.hpp"

using namespace umbe;

namespace {

// Naive triple loop, no skipping.
std::vector<double> matmul_oracle(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
    return c;
}

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t({r, c});
    for (double& v : t.data) v = rng.normal();
    return t;
}

}  // namespace

TEST(Matmul, IdentityTimesColumn) {
    Graph g;
    Var c = matmul(g.constant(Tensor::matrix({{1, 0}, {0, 1}})), g.constant(Tensor::matrix({{3}, {4}})));
    EXPECT_EQ(c.value().shape, (Shape{2, 1}));
    EXPECT_EQ(c.value().data, (std::vector<double>{3, 4}));
}

TEST(Matmul, ZeroCase) {
    Graph g;
    Var c = matmul(g.constant(Tensor::matrix({{2}})), g.constant(Tensor::matrix({{0}})));
    EXPECT_EQ(c.value().data, (std::vector<double>{0}));
}

TEST(Matmul, MatchesTripleLoop) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor a = random_matrix(3, 4, rng), b = random_matrix(4, 2, rng);
        Graph g;
        Var c = matmul(g.constant(a), g.constant(b));
        const auto want = matmul_oracle(a.data, b.data, 3, 4, 2);
        for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(c.value().data[i], want[i], 1e-12);
    }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    Graph g;
    try {
        matmul(g.constant(Tensor({2, 3})), g.constant(Tensor({2, 3})));
        FAIL();
    } catch (const DimensionError& e) {
        EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
        EXPECT_EQ(e.kind(), "dimension");
    }
}

TEST(Matmul, BackwardIsTransposedProducts) {
    Rng rng(5);
    Tensor a = random_matrix(2, 3, rng), b = random_matrix(3, 2, rng);
    a.requires_grad = b.requires_grad = true;
    Graph g;
    g.backward(sum(matmul(g.leaf(a), g.leaf(b))));
    // d/dA sum(AB) = 1·Bᵀ: row sums of B; d/dB = Aᵀ·1: column sums of A
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t p = 0; p < 3; ++p) EXPECT_NEAR(a.grad[i * 3 + p], b.data[p * 2] + b.data[p * 2 + 1], 1e-12);
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(b.grad[p * 2 + j], a.data[p] + a.data[3 + p], 1e-12);
}

TEST(Linear, MatchesMatmulWithTransposedWeight) {
    Rng rng(9);
    Tensor x = random_matrix(3, 4, rng), w = random_matrix(5, 4, rng);
    Tensor b({5});
    for (double& v : b.data) v = rng.normal();
    Graph g;
    Var y = linear(g.constant(x), g.constant(w), g.constant(b));
    std::vector<double> wt(20);
    for (std::size_t o = 0; o < 5; ++o)
        for (std::size_t i = 0; i < 4; ++i) wt[i * 5 + o] = w.data[o * 4 + i];
    auto want = matmul_oracle(x.data, wt, 3, 4, 5);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t o = 0; o < 5; ++o) EXPECT_NEAR(y.value().data[r * 5 + o], want[r * 5 + o] + b.data[o], 1e-12);
}

TEST(Softmax, UniformRow) {
    Graph g;
    Var y = softmax_rows(g.constant(Tensor::matrix({{0, 0, 0}})));
    for (double v : y.value().data) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, SingleSurvivor) {
    Graph g;
    Var y = softmax_rows(g.constant(Tensor::matrix({{0, kMaskedLogit, kMaskedLogit}})));
    EXPECT_EQ(y.value().data, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Softmax, MatchesExpNormalize) {
    Graph g;
    Var y = softmax_rows(g.constant(Tensor::matrix({{1, 2, 3}})));
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(y.value().data[j], std::exp(j + 1.0) / z, 1e-12);
}

TEST(Softmax, FullyMaskedRowIsDegenerate) {
    Graph g;
    EXPECT_THROW(softmax_rows(g.constant(Tensor::matrix({{1, 2}, {kMaskedLogit, kMaskedLogit}}))), DegenerateError);
}

TEST(Softmax, RowsSumToOneAndMaskedEntriesGetNoGradient) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor x = random_matrix(4, 5, rng);
        x.requires_grad = true;
        Tensor mask({4, 5});
        for (std::size_t r = 0; r < 4; ++r) {
            const std::size_t keep = rng.below(5);
            for (std::size_t c = 0; c < 5; ++c)
                mask(r, c) = (c == keep || rng.uniform() < 0.5) ? 0.0 : kMaskedLogit;
        }
        Tensor w = random_matrix(4, 5, rng);
        Graph g;
        Var y = softmax_rows(add_mask(g.leaf(x), mask));
        for (std::size_t r = 0; r < 4; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < 5; ++c) {
                s += y.value()(r, c);
                if (mask(r, c) == kMaskedLogit) EXPECT_EQ(y.value()(r, c), 0.0);
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
        g.backward(sum(mul(y, g.constant(w))));
        for (std::size_t i = 0; i < x.size(); ++i)
            if (mask.data[i] == kMaskedLogit) EXPECT_EQ(x.grad[i], 0.0);
    }
}

TEST(Cosine, SelfAndOrthogonal) {
    Graph g;
    EXPECT_NEAR(cosine(g.constant(Tensor::row({3, -1, 2})), g.constant(Tensor::row({3, -1, 2}))).item(), 1.0, 1e-15);
    EXPECT_EQ(cosine(g.constant(Tensor::row({1, 0})), g.constant(Tensor::row({0, 1}))).item(), 0.0);
}

TEST(Cosine, MatchesDirectFormula) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor a = random_matrix(1, 6, rng), b = random_matrix(1, 6, rng);
        double dot = 0, na = 0, nb = 0;
        for (int i = 0; i < 6; ++i) {
            dot += a.data[i] * b.data[i];
            na += a.data[i] * a.data[i];
            nb += b.data[i] * b.data[i];
        }
        Graph g;
        EXPECT_NEAR(cosine(g.constant(a), g.constant(b)).item(), dot / std::sqrt(na * nb), 1e-12);
    }
}

TEST(Cosine, DegenerateBelowEpsilon) {
    Graph g;
    EXPECT_THROW(cosine(g.constant(Tensor::row({0, 0})), g.constant(Tensor::row({1, 0}))), DegenerateError);
    EXPECT_THROW(cosine(g.constant(Tensor::row({1e-13, 0})), g.constant(Tensor::row({1, 0}))), DegenerateError);
}

TEST(Elementwise, Definitions) {
    Graph g;
    EXPECT_EQ(elementwise(Elementwise::sigmoid, g.constant(Tensor::scalar(0))).item(), 0.5);
    EXPECT_EQ(elementwise(Elementwise::relu, g.constant(Tensor::scalar(-3))).item(), 0.0);
    EXPECT_EQ(elementwise(Elementwise::relu, g.constant(Tensor::scalar(3))).item(), 3.0);
    EXPECT_EQ(elementwise(Elementwise::abs_sum, g.constant(Tensor::matrix({{-1, 2}, {0, -3}}))).item(), 6.0);
    EXPECT_EQ(elementwise(Elementwise::neg, g.constant(Tensor::scalar(2))).item(), -2.0);
    Var a = g.constant(Tensor::row({1, 2})), b = g.constant(Tensor::row({3, 4}));
    EXPECT_EQ(elementwise(Elementwise::add, a, b).value().data, (std::vector<double>{4, 6}));
    EXPECT_EQ(elementwise(Elementwise::mul, a, b).value().data, (std::vector<double>{3, 8}));
}

TEST(Elementwise, ShapeMismatchIsDimensionError) {
    Graph g;
    EXPECT_THROW(add(g.constant(Tensor::row({1, 2})), g.constant(Tensor::row({1, 2, 3}))), DimensionError);
    EXPECT_THROW(mul(g.constant(Tensor::row({1, 2})), g.constant(Tensor({2, 1}))), DimensionError);
}

TEST(Elementwise, SigmoidStaysInOpenInterval) {
    Graph g;
    for (double x : {-1e6, -800.0, -40.0, 0.0, 40.0, 800.0, 1e6}) {
        const double y = sigmoid(g.constant(Tensor::scalar(x))).item();
        EXPECT_GT(y, 0.0) << x;
        EXPECT_LT(y, 1.0) << x;
    }
}

TEST(Backward, SumGivesOnes) {
    Tensor w = Tensor::row({1, -2, 3});
    w.requires_grad = true;
    Graph g;
    g.backward(sum(g.leaf(w)));
    EXPECT_EQ(w.grad, (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareGivesTwoW) {
    Tensor w = Tensor::row({1, -2, 3});
    w.requires_grad = true;
    Graph g;
    Var x = g.leaf(w);
    g.backward(sum(mul(x, x)));
    EXPECT_EQ(w.grad, (std::vector<double>{2, -4, 6}));
}

TEST(Backward, TwiceAccumulates) {
    Tensor w = Tensor::row({1, 2});
    w.requires_grad = true;
    Graph g;
    Var x = g.leaf(w);
    Var loss = sum(mul(x, x));
    g.backward(loss);
    g.backward(loss);
    EXPECT_EQ(w.grad, (std::vector<double>{4, 8}));
}

TEST(Backward, NonScalarIsRankError) {
    Tensor w = Tensor::row({1, 2});
    w.requires_grad = true;
    Graph g;
    EXPECT_THROW(g.backward(g.leaf(w)), RankError);
}

TEST(Backward, CompositeMatchesFiniteDifferences) {
    for (const auto& r : {gradcheck_primitives(7), gradcheck_encoder(7)}) {
        EXPECT_TRUE(r.passed) << r.suite << " " << r.max_rel_error << " at " << r.worst;
        EXPECT_EQ(r.configs, 100u);
    }
}

TEST(Determinism, SameSeedSameValuesAndGradients) {
    auto run = [] {
        Rng rng(77);
        Tensor a = glorot_uniform(4, 3, rng), x = gaussian({2, 3}, 1.0, rng);
        Graph g;
        g.backward(sum(sigmoid(linear(g.leaf(x), g.leaf(a)))));
        std::vector<double> out = a.grad;
        out.insert(out.end(), x.grad.begin(), x.grad.end());
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(Rng, UniformRangeAndStateRoundTrip) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
    Rng copy(0);
    copy.set_state(rng.state());
    for (int i = 0; i < 10; ++i) EXPECT_EQ(copy.next(), rng.next());
}

TEST(Rng, NormalMoments) {
    Rng rng(2);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}
