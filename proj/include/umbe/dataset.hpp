// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic multimodal class-cluster data and its on-disk layout.
//
// A dataset directory holds, per split, one feature file per modality
// (`<split>_<modality>.f64`), a label file (`<split>_labels.u64`) and a
// `manifest.json` with counts and SHA-256 checksums. Feature files are a
// little-endian header {u64 rows, u64 width} followed by rows×width f64
// values; label files use the same header with width 1 and u64 values.

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "umbe/encoders.hpp"
#include "umbe/io.hpp"
#include "umbe/rng.hpp"

namespace umbe {

struct SynthSpec {
    std::size_t num_classes = 7;
    std::size_t n_train = 2000;
    std::size_t n_val = 0;
    std::size_t n_test = 500;
    std::array<std::size_t, kNumModalities> dims{32, 16, 24};
    std::array<double, kNumModalities> informativeness{0.9, 0.2, 0.6};
    double noise_sigma = 1.0;
    std::uint64_t seed = 7;

    void validate() const {
        if (num_classes < 2) throw ConfigError("synthetic data needs at least two classes");
        for (std::size_t d : dims)
            if (d < 1) throw ConfigError("feature widths must be >= 1");
        for (double v : informativeness)
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("informativeness entries must lie in [0, 1]");
        if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
        if (n_train == 0) throw ConfigError("n_train must be >= 1");
    }
};

inline std::vector<std::string> default_class_names(std::size_t c) {
    if (c == 7) return {"happy", "sad", "neutral", "angry", "surprise", "disgust", "fear"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < c; ++i) out.push_back("class_" + std::to_string(i));
    return out;
}

struct Dataset {
    std::size_t num_classes = 0;
    std::array<std::size_t, kNumModalities> dims{};
    std::vector<std::string> class_names;
    std::vector<ModalitySample> train;
    std::vector<ModalitySample> val;
    std::vector<ModalitySample> test;

    std::vector<ModalitySample>& split(const std::string& name) {
        return const_cast<std::vector<ModalitySample>&>(std::as_const(*this).split(name));
    }
    const std::vector<ModalitySample>& split(const std::string& name) const {
        if (name == "train") return train;
        if (name == "val") return val;
        if (name == "test") return test;
        throw ContractError("unknown split " + name);
    }
};

inline constexpr std::array<const char*, 3> kSplitNames{"train", "val", "test"};

/// Class-mean directions: means[c][m] is a standard-normal vector of width
/// dims[m].
using ClassMeans = std::vector<std::array<std::vector<double>, kNumModalities>>;

inline ClassMeans draw_class_means(const SynthSpec& spec, Rng& rng) {
    ClassMeans means(spec.num_classes);
    for (auto& per_class : means)
        for (std::size_t m = 0; m < kNumModalities; ++m) {
            per_class[m].resize(spec.dims[m]);
            for (double& v : per_class[m]) v = rng.normal();
        }
    return means;
}

/// x_m = informativeness_m · mean[c][m] + noise_sigma · N(0, I). Labels are
/// balanced round-robin and then shuffled.
inline Dataset generate_dataset(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const ClassMeans means = draw_class_means(spec, rng);
    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.dims = spec.dims;
    ds.class_names = default_class_names(spec.num_classes);
    auto make_split = [&](std::size_t n) {
        std::vector<std::size_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = i % spec.num_classes;
        rng.shuffle(labels);
        std::vector<ModalitySample> out;
        out.reserve(n);
        for (std::size_t label : labels) {
            ModalitySample s;
            s.label = label;
            for (std::size_t m = 0; m < kNumModalities; ++m) {
                std::vector<double> x(spec.dims[m]);
                for (std::size_t j = 0; j < x.size(); ++j)
                    x[j] = spec.informativeness[m] * means[label][m][j] + spec.noise_sigma * rng.normal();
                s.features[m] = std::move(x);
            }
            out.push_back(std::move(s));
        }
        return out;
    };
    ds.train = make_split(spec.n_train);
    ds.val = make_split(spec.n_val);
    ds.test = make_split(spec.n_test);
    return ds;
}

inline nlohmann::json spec_to_json(const SynthSpec& s) {
    return {{"classes", s.num_classes},
            {"n_train", s.n_train},
            {"n_val", s.n_val},
            {"n_test", s.n_test},
            {"dims", s.dims},
            {"informativeness", s.informativeness},
            {"noise_sigma", s.noise_sigma},
            {"seed", s.seed}};
}

inline std::string encode_features(const std::vector<ModalitySample>& samples, std::size_t m, std::size_t width) {
    BinaryWriter w;
    w.u64(samples.size());
    w.u64(width);
    for (const auto& s : samples) {
        if (!s.features[m] || s.features[m]->size() != width)
            throw ContractError("dataset files require every modality to be present with its declared width");
        w.f64s(*s.features[m]);
    }
    return w.bytes();
}

inline std::string encode_labels(const std::vector<ModalitySample>& samples) {
    BinaryWriter w;
    w.u64(samples.size());
    w.u64(1);
    for (const auto& s : samples) w.u64(s.label);
    return w.bytes();
}

inline std::string feature_file_name(const std::string& split, Modality m) {
    return split + "_" + modality_name(m) + ".f64";
}
inline std::string label_file_name(const std::string& split) { return split + "_labels.u64"; }

/// Writes every split plus manifest.json into `dir` (created if needed).
inline void write_dataset(const Dataset& ds, const SynthSpec& spec, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["dtype"] = "f64le";
    manifest["spec"] = spec_to_json(spec);
    manifest["class_names"] = ds.class_names;
    manifest["dims"] = ds.dims;
    nlohmann::json splits = nlohmann::json::object();
    nlohmann::json checksums = nlohmann::json::object();
    auto emit = [&](const std::string& name, const std::string& bytes) {
        write_file(dir / name, bytes);
        checksums[name] = sha256_hex(bytes);
    };
    for (const char* split : kSplitNames) {
        const auto& samples = ds.split(split);
        nlohmann::json files = nlohmann::json::object();
        for (Modality m : kModalities) {
            const std::string name = feature_file_name(split, m);
            emit(name, encode_features(samples, index_of(m), ds.dims[index_of(m)]));
            files[modality_name(m)] = name;
        }
        emit(label_file_name(split), encode_labels(samples));
        files["labels"] = label_file_name(split);
        splits[split] = {{"count", samples.size()}, {"files", files}};
    }
    manifest["splits"] = splits;
    manifest["checksums"] = checksums;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace detail {

inline std::string read_verified(const std::filesystem::path& dir, const nlohmann::json& checksums,
                                 const std::string& name) {
    const std::string bytes = read_file(dir / name);
    if (!checksums.contains(name)) throw IoError("manifest has no checksum for " + name);
    if (sha256_hex(bytes) != checksums.at(name).get<std::string>()) throw IoError("checksum mismatch for " + name);
    return bytes;
}

}  // namespace detail

/// Loads a dataset directory, verifying every checksum and count.
inline Dataset load_dataset(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
    }
    if (manifest.value("version", 0) != 1) throw IoError("unsupported dataset manifest version");
    if (manifest.value("dtype", "") != "f64le") throw IoError("unsupported feature dtype");
    Dataset ds;
    try {
        ds.class_names = manifest.at("class_names").get<std::vector<std::string>>();
        ds.num_classes = ds.class_names.size();
        ds.dims = manifest.at("dims").get<std::array<std::size_t, kNumModalities>>();
        const auto& checksums = manifest.at("checksums");
        for (const char* split : kSplitNames) {
            const auto& info = manifest.at("splits").at(split);
            const std::size_t count = info.at("count").get<std::size_t>();
            auto& samples = ds.split(split);
            samples.assign(count, ModalitySample{});
            BinaryReader labels(detail::read_verified(dir, checksums, info.at("files").at("labels")), "label file");
            if (labels.u64() != count || labels.u64() != 1) throw IoError(std::string("label header mismatch in ") + split);
            for (auto& s : samples) {
                s.label = labels.u64();
                if (s.label >= ds.num_classes) throw IoError("label out of range in " + std::string(split));
            }
            if (!labels.done()) throw IoError(std::string("trailing bytes in label file of ") + split);
            for (Modality m : kModalities) {
                const std::size_t mi = index_of(m);
                BinaryReader r(detail::read_verified(dir, checksums, info.at("files").at(modality_name(m))),
                               "feature file");
                if (r.u64() != count || r.u64() != ds.dims[mi])
                    throw IoError(std::string("feature header mismatch for ") + modality_name(m) + " in " + split);
                for (auto& s : samples) s.features[mi] = r.f64s(ds.dims[mi]);
                if (!r.done()) throw IoError(std::string("trailing bytes in feature file of ") + split);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
    }
    return ds;
}

}  // namespace umbe
