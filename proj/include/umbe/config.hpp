// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// INI-style run configuration. Sections: [model], [train], [synth]; ablation
// grids use [grid]. Unknown sections or keys are rejected.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "umbe/dataset.hpp"
#include "umbe/io.hpp"
#include "umbe/model.hpp"
#include "umbe/training.hpp"

namespace umbe {

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::optional<SynthSpec> synth;
};

struct AblationGrid {
    std::vector<std::size_t> lengths{32, 64};
    std::vector<std::size_t> sizes{8, 16, 32};
    std::vector<std::size_t> topks{3, 5};
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("key '" + key + "': not a non-negative integer: '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T, class Parse>
std::array<T, kNumModalities> parse_triple(const std::string& key, const std::string& raw, Parse parse) {
    const auto items = split_list(raw);
    if (items.size() != kNumModalities) throw ConfigError("key '" + key + "': expected three comma-separated values");
    std::array<T, kNumModalities> out{};
    for (std::size_t i = 0; i < kNumModalities; ++i) out[i] = static_cast<T>(parse(key, items[i]));
    return out;
}

inline std::vector<std::size_t> parse_uint_list(const std::string& key, const std::string& raw) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(raw)) out.push_back(parse_uint(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

inline Sections read_ini(const std::string& text, const std::set<std::string>& allowed_sections) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.message() + " at line " +
                          std::to_string(e.line()));
    }
    Sections out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("key '" + section + "' must live inside a section");
        if (!allowed_sections.count(section)) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : body) out[section][key] = value.data();
    }
    return out;
}

inline void reject_unknown(const std::string& section, const std::map<std::string, std::string>& kv,
                           const std::set<std::string>& known) {
    for (const auto& [k, v] : kv)
        if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in section [" + section + "]");
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string fmt_triple(const std::array<T, kNumModalities>& a) {
    std::ostringstream os;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) os << ",";
        if constexpr (std::is_floating_point_v<T>)
            os << fmt_double(a[i]);
        else
            os << a[i];
    }
    return os.str();
}

inline void apply_model(const std::map<std::string, std::string>& kv, ModelConfig& m) {
    reject_unknown("model", kv,
                   {"classes", "input_dims", "feature_dim", "anchor_hidden", "budget", "pool_size", "prompt_length",
                    "top_k", "inherent_length", "gate_hidden", "mapping", "tau", "beta", "lambda", "seed"});
    for (const auto& [k, v] : kv) {
        if (k == "classes") m.num_classes = parse_uint(k, v);
        else if (k == "input_dims") m.input_dims = parse_triple<std::size_t>(k, v, parse_uint);
        else if (k == "feature_dim") m.feature_dim = parse_uint(k, v);
        else if (k == "anchor_hidden") m.anchor_hidden = parse_uint(k, v);
        else if (k == "budget") m.budget = parse_triple<double>(k, v, parse_double);
        else if (k == "pool_size") m.pool_size = parse_uint(k, v);
        else if (k == "prompt_length") m.prompt_length = parse_uint(k, v);
        else if (k == "top_k") m.top_k = parse_uint(k, v);
        else if (k == "inherent_length") m.inherent_length = parse_uint(k, v);
        else if (k == "gate_hidden") m.gate_hidden = parse_uint(k, v);
        else if (k == "mapping") m.mapping = parse_mapping(trim(v));
        else if (k == "tau") m.tau = parse_double(k, v);
        else if (k == "beta") m.beta = parse_double(k, v);
        else if (k == "lambda") m.lambda = parse_double(k, v);
        else if (k == "seed") m.seed = parse_uint(k, v);
    }
}

inline void apply_train(const std::map<std::string, std::string>& kv, TrainConfig& t) {
    reject_unknown("train", kv,
                   {"lr_init", "batch_size", "lr_decay", "patience_epochs", "lr_floor", "train_acc_stop",
                    "improve_epsilon", "max_epochs", "stage1_max_epochs", "seed", "stage2_dropout",
                    "transfer_threshold", "restore_pool_size", "val_fraction", "optimizer"});
    for (const auto& [k, v] : kv) {
        if (k == "lr_init") t.lr_init = parse_double(k, v);
        else if (k == "batch_size") t.batch_size = parse_uint(k, v);
        else if (k == "lr_decay") t.lr_decay = parse_double(k, v);
        else if (k == "patience_epochs") t.patience_epochs = parse_uint(k, v);
        else if (k == "lr_floor") t.lr_floor = parse_double(k, v);
        else if (k == "train_acc_stop") t.train_acc_stop = parse_double(k, v);
        else if (k == "improve_epsilon") t.improve_epsilon = parse_double(k, v);
        else if (k == "max_epochs") t.max_epochs = parse_uint(k, v);
        else if (k == "stage1_max_epochs") t.stage1_max_epochs = parse_uint(k, v);
        else if (k == "seed") t.seed = parse_uint(k, v);
        else if (k == "stage2_dropout") t.stage2_dropout = parse_triple<double>(k, v, parse_double);
        else if (k == "transfer_threshold") t.transfer_threshold = parse_uint(k, v);
        else if (k == "restore_pool_size") t.restore_pool_size = parse_bool(k, v);
        else if (k == "val_fraction") t.val_fraction = parse_double(k, v);
        else if (k == "optimizer" && trim(v) != "adam") throw ConfigError("optimizer must be adam");
    }
}

inline void apply_synth(const std::map<std::string, std::string>& kv, SynthSpec& s) {
    reject_unknown("synth", kv,
                   {"classes", "n_train", "n_val", "n_test", "dims", "informativeness", "noise_sigma", "seed"});
    for (const auto& [k, v] : kv) {
        if (k == "classes") s.num_classes = parse_uint(k, v);
        else if (k == "n_train") s.n_train = parse_uint(k, v);
        else if (k == "n_val") s.n_val = parse_uint(k, v);
        else if (k == "n_test") s.n_test = parse_uint(k, v);
        else if (k == "dims") s.dims = parse_triple<std::size_t>(k, v, parse_uint);
        else if (k == "informativeness") s.informativeness = parse_triple<double>(k, v, parse_double);
        else if (k == "noise_sigma") s.noise_sigma = parse_double(k, v);
        else if (k == "seed") s.seed = parse_uint(k, v);
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    const auto sections = detail::read_ini(text, {"model", "train", "synth"});
    RunConfig rc;
    if (auto it = sections.find("model"); it != sections.end()) detail::apply_model(it->second, rc.model);
    if (auto it = sections.find("train"); it != sections.end()) detail::apply_train(it->second, rc.train);
    if (auto it = sections.find("synth"); it != sections.end()) {
        rc.synth = SynthSpec{};
        detail::apply_synth(it->second, *rc.synth);
        rc.synth->validate();
    }
    rc.train.validate();
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& p) { return parse_run_config(read_file(p)); }

/// A [synth] section on its own (the gen-data spec file).
inline SynthSpec parse_synth_spec(const std::string& text) {
    const auto sections = detail::read_ini(text, {"synth"});
    SynthSpec s;
    if (auto it = sections.find("synth"); it != sections.end()) detail::apply_synth(it->second, s);
    s.validate();
    return s;
}

inline AblationGrid parse_grid(const std::string& text) {
    const auto sections = detail::read_ini(text, {"grid"});
    AblationGrid g;
    if (auto it = sections.find("grid"); it != sections.end()) {
        detail::reject_unknown("grid", it->second, {"length", "size", "topk"});
        for (const auto& [k, v] : it->second) {
            if (k == "length") g.lengths = detail::parse_uint_list(k, v);
            else if (k == "size") g.sizes = detail::parse_uint_list(k, v);
            else if (k == "topk") g.topks = detail::parse_uint_list(k, v);
        }
    }
    return g;
}

/// Canonical text for a model/train pair; the config hash is its SHA-256.
inline std::string canonical_config(const ModelConfig& m, const TrainConfig& t) {
    using detail::fmt_double;
    using detail::fmt_triple;
    std::ostringstream os;
    os << "[model]\n"
       << "classes = " << m.num_classes << "\n"
       << "input_dims = " << fmt_triple(m.input_dims) << "\n"
       << "feature_dim = " << m.feature_dim << "\n"
       << "anchor_hidden = " << m.anchor_hidden << "\n"
       << "budget = " << fmt_triple(m.budget) << "\n"
       << "pool_size = " << m.pool_size << "\n"
       << "prompt_length = " << m.prompt_length << "\n"
       << "top_k = " << m.top_k << "\n"
       << "inherent_length = " << m.inherent_length << "\n"
       << "gate_hidden = " << m.gate_hidden << "\n"
       << "mapping = " << mapping_name(m.mapping) << "\n"
       << "tau = " << fmt_double(m.tau) << "\n"
       << "beta = " << fmt_double(m.beta) << "\n"
       << "lambda = " << fmt_double(m.lambda) << "\n"
       << "seed = " << m.seed << "\n"
       << "\n[train]\n"
       << "lr_init = " << fmt_double(t.lr_init) << "\n"
       << "batch_size = " << t.batch_size << "\n"
       << "lr_decay = " << fmt_double(t.lr_decay) << "\n"
       << "patience_epochs = " << t.patience_epochs << "\n"
       << "lr_floor = " << fmt_double(t.lr_floor) << "\n"
       << "train_acc_stop = " << fmt_double(t.train_acc_stop) << "\n"
       << "improve_epsilon = " << fmt_double(t.improve_epsilon) << "\n"
       << "max_epochs = " << t.max_epochs << "\n"
       << "stage1_max_epochs = " << t.stage1_max_epochs << "\n"
       << "seed = " << t.seed << "\n"
       << "stage2_dropout = " << fmt_triple(t.stage2_dropout) << "\n"
       << "transfer_threshold = " << t.transfer_threshold << "\n"
       << "restore_pool_size = " << (t.restore_pool_size ? "true" : "false") << "\n"
       << "val_fraction = " << fmt_double(t.val_fraction) << "\n"
       << "optimizer = adam\n";
    return os.str();
}

}  // namespace umbe
