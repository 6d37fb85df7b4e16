// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations shared by the unit tests and the
// acceptance binary. Nothing here calls into the code under test beyond
// reading plain data out of its structs.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "umbe/dataset.hpp"
#include "umbe/metrics.hpp"
#include "umbe/prompt_pool.hpp"

namespace oracle {

/// Full cosine table, stable sort, first k.
inline std::vector<std::size_t> brute_force_topk(const umbe::PromptPool& pool, const std::vector<double>& q,
                                                 std::size_t k, const umbe::TagFilter& eligible = umbe::kAllTags) {
    std::vector<std::size_t> idx;
    std::vector<double> sim(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
        const auto& key = pool.entries[j].key.data;
        double dot = 0, nq = 0, nk = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            dot += q[i] * key[i];
            nq += q[i] * q[i];
            nk += key[i] * key[i];
        }
        sim[j] = std::clamp(dot / (std::sqrt(nq) * std::sqrt(nk)), -1.0, 1.0);
        if (eligible[static_cast<std::size_t>(pool.entries[j].tag)]) idx.push_back(j);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

/// Reduced fraction over 128-bit integers.
struct Frac {
    using i128 = __int128;
    i128 num = 0, den = 1;
    Frac(i128 n, i128 d) : num(n), den(d) {
        i128 a = num < 0 ? -num : num, b = den;
        while (b) {
            const i128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
    }
    Frac operator+(const Frac& o) const { return {num * o.den + o.num * den, den * o.den}; }

    static std::string str(i128 v) {
        if (v == 0) return "0";
        std::string s;
        const bool neg = v < 0;
        if (neg) v = -v;
        while (v) {
            s.insert(s.begin(), char('0' + int(v % 10)));
            v /= 10;
        }
        return neg ? "-" + s : s;
    }
    bool equals(const umbe::Rational& r) const {
        return boost::multiprecision::numerator(r).str() == str(num) &&
               boost::multiprecision::denominator(r).str() == str(den);
    }
};

/// Hand count of WAR and UAR as exact fractions.
struct HandMetrics {
    Frac war{0, 1}, uar{0, 1};
    std::vector<Frac> recall;
};

inline HandMetrics hand_metrics(const umbe::ConfusionMatrix& cm) {
    HandMetrics h;
    const std::size_t c = cm.num_classes;
    Frac::i128 trace = 0, total = 0;
    Frac sum(0, 1);
    for (std::size_t t = 0; t < c; ++t) {
        Frac::i128 row = 0;
        for (std::size_t p = 0; p < c; ++p) row += cm.counts[t * c + p];
        total += row;
        trace += cm.counts[t * c + t];
        h.recall.emplace_back(cm.counts[t * c + t], row);
        sum = sum + h.recall.back();
    }
    h.war = Frac(trace, total);
    h.uar = Frac(sum.num, sum.den * static_cast<Frac::i128>(c));
    return h;
}

/// Plateau schedule written out step by step.
struct Schedule {
    double lr = 0.002;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    std::string step(double loss, double acc) {
        if (loss < best - 1e-4) {
            best = loss;
            stale = 0;
        } else if (++stale == 3) {
            lr *= 0.6;
            stale = 0;
        }
        if (lr < 1e-7) return "stop(lr_floor)";
        if (acc > 0.80) return "stop(acc)";
        return "continue";
    }
};

/// Nearest class centroid on concatenated features, fitted on train, scored
/// on test.
inline double nearest_centroid_accuracy(const umbe::Dataset& ds) {
    const std::size_t width = ds.dims[0] + ds.dims[1] + ds.dims[2];
    auto concat = [&](const umbe::ModalitySample& s) {
        std::vector<double> x;
        for (const auto& f : s.features) x.insert(x.end(), f->begin(), f->end());
        return x;
    };
    std::vector<std::vector<double>> mu(ds.num_classes, std::vector<double>(width, 0.0));
    std::vector<double> n(ds.num_classes, 0.0);
    for (const auto& s : ds.train) {
        const auto x = concat(s);
        for (std::size_t j = 0; j < width; ++j) mu[s.label][j] += x[j];
        n[s.label] += 1;
    }
    for (std::size_t c = 0; c < ds.num_classes; ++c)
        for (double& v : mu[c]) v /= n[c];
    std::size_t hit = 0;
    for (const auto& s : ds.test) {
        const auto x = concat(s);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < ds.num_classes; ++c) {
            double d = 0;
            for (std::size_t j = 0; j < width; ++j) d += (x[j] - mu[c][j]) * (x[j] - mu[c][j]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        hit += best == s.label;
    }
    return double(hit) / double(ds.test.size());
}

}  // namespace oracle
