// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "umbe/encoders.hpp"
#include "umbe/errors.hpp"

namespace umbe {

using Rational = boost::multiprecision::cpp_rational;

struct UndefinedRecallError : Error {
    explicit UndefinedRecallError(const std::string& w) : Error("undefined_recall", w) {}
};

/// Counts indexed [true class][predicted class].
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t c) : num_classes(c), counts(c * c, 0) {}

    std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts[truth * num_classes + pred]; }
    std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts[truth * num_classes + pred]; }

    void add(std::size_t truth, std::size_t pred) {
        if (truth >= num_classes || pred >= num_classes) throw ContractError("confusion index out of range");
        ++at(truth, pred);
    }

    std::uint64_t row_sum(std::size_t truth) const {
        std::uint64_t s = 0;
        for (std::size_t p = 0; p < num_classes; ++p) s += at(truth, p);
        return s;
    }
    std::uint64_t trace() const {
        std::uint64_t s = 0;
        for (std::size_t c = 0; c < num_classes; ++c) s += at(c, c);
        return s;
    }
    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (auto v : counts) s += v;
        return s;
    }

    /// Submatrix over `classes` (rows and columns, in the given order).
    ConfusionMatrix restricted(const std::vector<std::size_t>& classes) const {
        ConfusionMatrix out(classes.size());
        for (std::size_t i = 0; i < classes.size(); ++i)
            for (std::size_t j = 0; j < classes.size(); ++j) out.at(i, j) = at(classes[i], classes[j]);
        return out;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
        if (o.num_classes != num_classes) throw DimensionError("confusion matrices differ in class count");
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        return *this;
    }
};

struct Metrics {
    double war = 0.0;
    double uar = 0.0;
    std::vector<double> per_class_recall;
    Rational war_exact;
    Rational uar_exact;
    std::vector<Rational> recall_exact;
};

/// WAR = trace/total, recall_c = cm[c][c]/rowsum_c, UAR = mean recall.
/// Everything is computed exactly and rounded once to double.
inline Metrics metrics(const ConfusionMatrix& cm) {
    Metrics m;
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < cm.num_classes; ++c)
        if (cm.row_sum(c) == 0) empty.push_back(c);
    if (!empty.empty()) {
        std::string list;
        for (std::size_t c : empty) list += (list.empty() ? "" : ",") + std::to_string(c);
        throw UndefinedRecallError("recall undefined for classes without samples: " + list);
    }
    if (cm.num_classes == 0) throw UndefinedRecallError("empty confusion matrix");
    m.war_exact = Rational(cm.trace(), cm.total());
    Rational sum = 0;
    for (std::size_t c = 0; c < cm.num_classes; ++c) {
        Rational r(cm.at(c, c), cm.row_sum(c));
        m.recall_exact.push_back(r);
        m.per_class_recall.push_back(static_cast<double>(r));
        sum += r;
    }
    m.uar_exact = sum / cm.num_classes;
    m.war = static_cast<double>(m.war_exact);
    m.uar = static_cast<double>(m.uar_exact);
    return m;
}

/// Parses "VAT"-style patterns: position 0 is V or '-', 1 is A or '-', 2 is
/// T or '-'. Case-insensitive; "---" is rejected.
inline Presence parse_pattern(const std::string& s) {
    static constexpr char letters[] = {'V', 'A', 'T'};
    if (s.size() != kNumModalities) throw ConfigError("pattern '" + s + "' must have exactly three characters");
    Presence p{};
    for (std::size_t m = 0; m < kNumModalities; ++m) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[m])));
        if (c == letters[m]) {
            p[m] = true;
        } else if (c != '-') {
            throw ConfigError("pattern '" + s + "': position " + std::to_string(m) + " must be '" + letters[m] +
                              "' or '-'");
        }
    }
    if (present_count(p) == 0) throw DegenerateError("pattern '" + s + "' has no modality present");
    return p;
}

inline std::string pattern_string(const Presence& p) {
    return std::string{p[0] ? 'V' : '-', p[1] ? 'A' : '-', p[2] ? 'T' : '-'};
}

struct EvalReport {
    double war = 0.0;
    double uar = 0.0;
    std::vector<double> per_class_recall;
    Presence presence{true, true, true};
    std::optional<std::vector<std::size_t>> class_subset;
    std::vector<std::string> class_names;  // of retained classes
    ConfusionMatrix confusion;             // over retained classes
};

/// Aligned plain-text rendering.
inline std::string report_table(const EvalReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "pattern " << pattern_string(r.presence) << "  WAR " << r.war << "  UAR " << r.uar << "\n";
    std::size_t w = 5;
    for (const auto& n : r.class_names) w = std::max(w, n.size());
    os << std::left << std::setw(static_cast<int>(w)) << "class" << "  recall\n";
    for (std::size_t c = 0; c < r.per_class_recall.size(); ++c)
        os << std::left << std::setw(static_cast<int>(w)) << r.class_names[c] << "  " << r.per_class_recall[c] << "\n";
    return os.str();
}

/// Header of class names, then one row of counts per true class.
inline std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
    std::ostringstream os;
    for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
    os << "\n";
    for (std::size_t t = 0; t < cm.num_classes; ++t) {
        for (std::size_t p = 0; p < cm.num_classes; ++p) os << (p ? "," : "") << cm.at(t, p);
        os << "\n";
    }
    return os.str();
}

}  // namespace umbe
