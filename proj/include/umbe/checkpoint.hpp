// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint container. Layout (little-endian):
//
//   "UMBECKPT" u32 version
//   str config_text  str config_hash
//   u64 n_params   { str name  u64 rank  u64 dims[rank]  f64 data[] }   (pool excluded)
//   u64 n_entries u64 prompt_length u64 token_dim u64 key_dim
//                  { u8 tag  u64 activation_count  f64 key[]  f64 value[] }
//   u64 n_moments  { str name  u64 t  u64 n  f64 m[n]  f64 v[n] }
//   u64 epoch f64 lr f64 best_val_loss u64 epochs_since_improvement u32 stage str rng_state
//
// Every double is stored by bit pattern, so a round trip is exact.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "umbe/config.hpp"
#include "umbe/io.hpp"
#include "umbe/training.hpp"

namespace umbe {

inline constexpr char kCheckpointMagic[] = "UMBECKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline bool is_pool_param(const std::string& name) { return name.rfind("pool.", 0) == 0; }

inline void write_tensor(BinaryWriter& w, const Tensor& t) {
    w.u64(t.shape.size());
    for (std::size_t d : t.shape) w.u64(d);
    w.f64s(t.data);
}

}  // namespace detail

inline std::string config_hash(const Session& s) {
    return sha256_hex(canonical_config(s.model.config, s.train_config));
}

inline std::string serialize_checkpoint(Session& s) {
    BinaryWriter w;
    w.raw(std::string(kCheckpointMagic, 8));
    w.u32(kCheckpointVersion);
    const std::string text = canonical_config(s.model.config, s.train_config);
    w.str(text);
    w.str(sha256_hex(text));

    std::vector<std::pair<std::string, Tensor*>> params;
    for (auto& [name, t] : s.model.parameters())
        if (!detail::is_pool_param(name)) params.emplace_back(name, t);
    w.u64(params.size());
    for (auto& [name, t] : params) {
        w.str(name);
        detail::write_tensor(w, *t);
    }

    const PromptPool& pool = s.model.pool;
    w.u64(pool.size());
    w.u64(pool.prompt_length);
    w.u64(pool.token_dim);
    w.u64(pool.key_dim);
    for (const auto& e : pool.entries) {
        w.u8(static_cast<std::uint8_t>(e.tag));
        w.u64(e.activation_count);
        w.f64s(e.key.data);
        w.f64s(e.value.data);
    }

    w.u64(s.adam.state.size());
    for (const auto& [name, mom] : s.adam.state) {
        w.str(name);
        w.u64(mom.t);
        w.u64(mom.m.size());
        w.f64s(mom.m);
        w.f64s(mom.v);
    }

    s.state.rng_state = s.rng.state();
    w.u64(s.state.epoch);
    w.f64(s.state.lr);
    w.f64(s.state.best_val_loss);
    w.u64(s.state.epochs_since_improvement);
    w.u32(static_cast<std::uint32_t>(s.state.stage));
    w.str(s.state.rng_state);
    return w.bytes();
}

inline Session deserialize_checkpoint(const std::string& bytes) {
    BinaryReader r(bytes, "checkpoint");
    if (r.raw(8) != std::string(kCheckpointMagic, 8)) throw IoError("not a checkpoint file (bad magic)");
    if (const auto v = r.u32(); v != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(v));
    const std::string text = r.str();
    if (r.str() != sha256_hex(text)) throw IoError("checkpoint config hash mismatch");

    RunConfig rc;
    try {
        rc = parse_run_config(text);
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint carries an invalid configuration: ") + e.what());
    }
    Session s = Session::create(rc.model, rc.train);

    std::map<std::string, Tensor*> by_name;
    for (auto& [name, t] : s.model.parameters())
        if (!detail::is_pool_param(name)) by_name[name] = t;
    const std::uint64_t n_params = r.u64();
    if (n_params != by_name.size()) throw IoError("checkpoint parameter count does not match its configuration");
    for (std::uint64_t i = 0; i < n_params; ++i) {
        const std::string name = r.str();
        auto it = by_name.find(name);
        if (it == by_name.end()) throw IoError("checkpoint has unexpected parameter " + name);
        Shape shape(r.u64());
        for (auto& d : shape) d = r.u64();
        if (shape != it->second->shape)
            throw IoError("shape mismatch for " + name + ": file " + shape_str(shape) + ", model " +
                          shape_str(it->second->shape));
        it->second->data = r.f64s(shape_size(shape));
    }

    PromptPool& pool = s.model.pool;
    const std::uint64_t n_entries = r.u64();
    pool.prompt_length = r.u64();
    pool.token_dim = r.u64();
    pool.key_dim = r.u64();
    if (pool.prompt_length != rc.model.prompt_length || pool.token_dim != rc.model.token_dim() ||
        pool.key_dim != rc.model.feature_dim)
        throw IoError("checkpoint pool geometry does not match its configuration");
    pool.entries.clear();
    for (std::uint64_t i = 0; i < n_entries; ++i) {
        PromptEntry e;
        const std::uint8_t tag = r.u8();
        if (tag >= kNumTags) throw IoError("invalid prompt tag in checkpoint");
        e.tag = static_cast<PromptTag>(tag);
        e.activation_count = r.u64();
        e.key = Tensor(Shape{pool.key_dim});
        e.key.data = r.f64s(pool.key_dim);
        e.key.requires_grad = true;
        e.value = Tensor(Shape{pool.prompt_length, pool.token_dim});
        e.value.data = r.f64s(pool.prompt_length * pool.token_dim);
        e.value.requires_grad = true;
        pool.entries.push_back(std::move(e));
    }
    if (pool.size() < s.model.config.top_k) throw IoError("checkpoint pool is smaller than top_k");

    const std::uint64_t n_moments = r.u64();
    for (std::uint64_t i = 0; i < n_moments; ++i) {
        const std::string name = r.str();
        AdamMoments mom;
        mom.t = r.u64();
        const std::uint64_t n = r.u64();
        mom.m = r.f64s(n);
        mom.v = r.f64s(n);
        s.adam.state[name] = std::move(mom);
    }

    s.state.epoch = r.u64();
    s.state.lr = r.f64();
    s.state.best_val_loss = r.f64();
    s.state.epochs_since_improvement = r.u64();
    s.state.stage = static_cast<int>(r.u32());
    s.state.rng_state = r.str();
    s.rng.set_state(s.state.rng_state);
    if (!r.done()) throw IoError("trailing bytes in checkpoint");
    return s;
}

inline void save_checkpoint(Session& s, const std::filesystem::path& p) { write_file(p, serialize_checkpoint(s)); }

inline Session load_checkpoint(const std::filesystem::path& p) { return deserialize_checkpoint(read_file(p)); }

}  // namespace umbe
