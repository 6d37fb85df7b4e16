// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "umbe/evaluation.hpp"
#include "umbe/experiment.hpp"

using namespace umbe;

namespace {

ConfusionMatrix random_matrix(Rng& rng, std::size_t c, std::uint64_t max_count) {
    ConfusionMatrix cm(c);
    for (std::size_t t = 0; t < c; ++t) {
        for (std::size_t p = 0; p < c; ++p) cm.at(t, p) = rng.below(max_count + 1);
        if (cm.row_sum(t) == 0) cm.at(t, rng.below(c)) = 1;
    }
    return cm;
}

ConfusionMatrix worked_example() {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 81;
    cm.at(0, 1) = 9;
    cm.at(1, 1) = 5;
    cm.at(1, 0) = 5;
    return cm;
}

}  // namespace

TEST(Metrics, WorkedExample) {
    const Metrics m = metrics(worked_example());
    EXPECT_EQ(m.war_exact, Rational(86, 100));
    EXPECT_EQ(m.uar_exact, Rational(70, 100));
    EXPECT_EQ(m.war, 0.86);
    EXPECT_EQ(m.uar, 0.70);
}

TEST(Metrics, DiagonalIsPerfect) {
    ConfusionMatrix cm(4);
    for (std::size_t c = 0; c < 4; ++c) cm.at(c, c) = 3 + c;
    const Metrics m = metrics(cm);
    EXPECT_EQ(m.war, 1.0);
    EXPECT_EQ(m.uar, 1.0);
    for (double r : m.per_class_recall) EXPECT_EQ(r, 1.0);
}

TEST(Metrics, ExactAgainstIntegerFractionOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t c = 2 + rng.below(8);
        const ConfusionMatrix cm = random_matrix(rng, c, 60);
        const Metrics m = metrics(cm);
        const oracle::HandMetrics h = oracle::hand_metrics(cm);
        for (std::size_t t = 0; t < c; ++t) EXPECT_TRUE(h.recall[t].equals(m.recall_exact[t]));
        EXPECT_TRUE(h.war.equals(m.war_exact)) << m.war_exact;
        EXPECT_TRUE(h.uar.equals(m.uar_exact)) << m.uar_exact;
        EXPECT_EQ(m.war, static_cast<double>(Rational(cm.trace(), cm.total())));
    }
}

TEST(Metrics, BalancedRowsMakeWarEqualUar) {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t c = 2 + rng.below(6);
        ConfusionMatrix cm(c);
        for (std::size_t t = 0; t < c; ++t)
            for (int i = 0; i < 20; ++i) cm.add(t, rng.below(c));
        const Metrics m = metrics(cm);
        EXPECT_EQ(m.war_exact, m.uar_exact);
    }
}

TEST(Metrics, UniformRandomPredictionsNearChance) {
    Rng rng(3);
    ConfusionMatrix cm(7);
    for (int i = 0; i < 70000; ++i) cm.add(rng.below(7), rng.below(7));
    const Metrics m = metrics(cm);
    EXPECT_NEAR(m.war, 1.0 / 7.0, 0.01);
    EXPECT_NEAR(m.uar, 1.0 / 7.0, 0.01);
}

TEST(Metrics, WarBetweenExtremeRecalls) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const Metrics m = metrics(random_matrix(rng, 2 + rng.below(6), 30));
        const auto [lo, hi] = std::minmax_element(m.recall_exact.begin(), m.recall_exact.end());
        EXPECT_LE(*lo, m.war_exact);
        EXPECT_LE(m.war_exact, *hi);
        EXPECT_LE(*lo, m.uar_exact);
        EXPECT_LE(m.uar_exact, *hi);
    }
}

TEST(Metrics, ClassRelabelingLeavesMetricsUnchanged) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t c = 2 + rng.below(6);
        const ConfusionMatrix cm = random_matrix(rng, c, 30);
        std::vector<std::size_t> perm(c);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        const Metrics a = metrics(cm), b = metrics(cm.restricted(perm));
        EXPECT_EQ(a.war_exact, b.war_exact);
        EXPECT_EQ(a.uar_exact, b.uar_exact);
    }
}

TEST(Metrics, EmptyRowIsUndefinedRecall) {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 4;
    cm.at(2, 1) = 1;
    try {
        metrics(cm);
        FAIL() << "expected UndefinedRecallError";
    } catch (const UndefinedRecallError& e) {
        EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
        EXPECT_EQ(e.kind(), "undefined_recall");
    }
}

TEST(Metrics, AddOutOfRangeIsContractError) {
    ConfusionMatrix cm(2);
    EXPECT_THROW(cm.add(2, 0), ContractError);
}

TEST(Pattern, ParsesAndRenders) {
    EXPECT_EQ(parse_pattern("VAT"), (Presence{true, true, true}));
    EXPECT_EQ(parse_pattern("V-T"), (Presence{true, false, true}));
    EXPECT_EQ(parse_pattern("--T"), (Presence{false, false, true}));
    EXPECT_EQ(parse_pattern("va-"), (Presence{true, true, false}));
    for (const char* s : {"VAT", "V--", "-A-", "--T", "VA-", "V-T", "-AT"}) EXPECT_EQ(pattern_string(parse_pattern(s)), s);
}

TEST(Pattern, RejectsBadInput) {
    EXPECT_THROW(parse_pattern("---"), DegenerateError);
    EXPECT_THROW(parse_pattern("AVT"), ConfigError);
    EXPECT_THROW(parse_pattern("VA"), ConfigError);
    EXPECT_THROW(parse_pattern("VATX"), ConfigError);
    EXPECT_THROW(parse_pattern("V?T"), ConfigError);
}

class EvalMissingTest : public ::testing::Test {
protected:
    void SetUp() override {
        SynthSpec s;
        s.num_classes = 4;
        s.n_train = 8;
        s.n_test = 80;
        s.dims = {6, 4, 3};
        s.seed = 21;
        ds = generate_dataset(s);
        ModelConfig mc;
        mc.feature_dim = 8;
        mc.anchor_hidden = 24;
        mc.pool_size = 8;
        mc.prompt_length = 4;
        mc.top_k = 2;
        mc.inherent_length = 2;
        model = UmbeModel::create(fit_to_data(mc, ds));
    }
    Dataset ds;
    UmbeModel model;
};

TEST_F(EvalMissingTest, FullPatternMatchesPlainPrediction) {
    ConfusionMatrix cm(4);
    for (const auto& s : ds.test) cm.add(s.label, model.predict(s).first);
    const EvalReport r = eval_missing(model, ds.test, parse_pattern("VAT"));
    EXPECT_EQ(r.confusion.counts, cm.counts);
    EXPECT_EQ(r.war, metrics(cm).war);
}

TEST_F(EvalMissingTest, PatternIsForcedOnEverySample) {
    const Presence p = parse_pattern("-A-");
    ConfusionMatrix cm(4);
    for (const auto& s : ds.test) {
        ModalitySample only_audio;
        only_audio.label = s.label;
        only_audio.features[1] = s.features[1];
        cm.add(s.label, model.predict(only_audio).first);
    }
    EXPECT_EQ(eval_missing(model, ds.test, p).confusion.counts, cm.counts);
}

TEST_F(EvalMissingTest, ClassSubsetRecomputesOnRetainedClasses) {
    const std::vector<std::size_t> subset{2, 0};
    const EvalReport r = eval_missing(model, ds.test, parse_pattern("VAT"), subset);
    ConfusionMatrix cm(2);
    for (const auto& s : ds.test) {
        if (s.label != 2 && s.label != 0) continue;
        const std::size_t pred = model.predict(s).first;
        const std::size_t t = s.label == 2 ? 0 : 1;
        if (pred == 2) cm.at(t, 0) += 1;
        else if (pred == 0) cm.at(t, 1) += 1;
    }
    EXPECT_EQ(r.confusion.counts, cm.counts);
    EXPECT_EQ(r.class_names, (std::vector<std::string>{"class_2", "class_0"}));
    EXPECT_EQ(r.per_class_recall.size(), 2u);
    EXPECT_THROW(eval_missing(model, ds.test, parse_pattern("VAT"), std::vector<std::size_t>{4}), ConfigError);
    EXPECT_THROW(eval_missing(model, ds.test, parse_pattern("VAT"), std::vector<std::size_t>{1, 1}), ConfigError);
}

TEST(Report, CsvAndJsonLayout) {
    const ConfusionMatrix cm = worked_example();
    EXPECT_EQ(confusion_csv(cm, {"a", "b"}), "a,b\n81,9\n5,5\n");
    EvalReport r;
    r.confusion = cm;
    r.war = 0.86;
    r.uar = 0.7;
    r.per_class_recall = {0.9, 0.5};
    r.class_names = {"a", "b"};
    const auto j = report_json(r, "abc", {{"split", "test"}});
    EXPECT_EQ(j["war"], 0.86);
    EXPECT_EQ(j["pattern"], "VAT");
    EXPECT_EQ(j["checkpoint_hash"], "abc");
    EXPECT_EQ(j["confusion"][0][1], 9);
    EXPECT_TRUE(j["subset"].is_null());
    EXPECT_NE(report_table(r).find("WAR 0.8600"), std::string::npos);
}
