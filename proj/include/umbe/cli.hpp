// Copyright (C) 2026 The umbe authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit status: 0 success, 1 validation error,
// 2 I/O error. Failures print one line to stderr:
//
//   error kind=<kind> command=<command> message="<text>"

#pragma once

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "umbe/checkpoint.hpp"
#include "umbe/experiment.hpp"
#include "umbe/gradcheck.hpp"

namespace umbe {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2 };

namespace detail {

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n' || c == '\r') c = ' ';
        out.push_back(c);
    }
    return out + "\"";
}

inline int fail(std::ostream& err, const std::string& kind, const std::string& command, const std::string& msg,
                int code) {
    err << "error kind=" << kind << " command=" << (command.empty() ? "-" : command) << " message=" << quote(msg)
        << "\n";
    return code;
}

inline std::vector<std::size_t> parse_class_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(s)) out.push_back(parse_uint("--classes", item));
    return out;
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline nlohmann::json history_json(const std::vector<StageResult>& stages) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& st : stages) {
        nlohmann::json epochs = nlohmann::json::array();
        for (const auto& e : st.history)
            epochs.push_back({{"epoch", e.epoch},
                              {"lr", e.lr},
                              {"train_loss", e.train_loss},
                              {"val_loss", e.val_loss},
                              {"train_accuracy", e.train_accuracy}});
        j.push_back({{"stage", st.history.empty() ? 0 : st.history.front().stage},
                     {"stop", st.stop_reason},
                     {"activations_by_tag", st.activations_by_tag},
                     {"epochs", epochs}});
    }
    return j;
}

}  // namespace detail

struct CliStreams {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
};

inline int cmd_gen_data(const std::string& spec_path, const std::string& out_dir, CliStreams io) {
    const SynthSpec spec = parse_synth_spec(read_file(spec_path));
    write_dataset(generate_dataset(spec), spec, out_dir);
    io.out << "wrote " << spec.n_train << "/" << spec.n_val << "/" << spec.n_test << " samples to " << out_dir << "\n";
    return kExitOk;
}

inline int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& out_path,
                     const std::string& stage, const std::string& init_path, const std::string& history_path,
                     CliStreams io) {
    const RunConfig rc = load_run_config(config_path);
    const StagePlan plan = parse_stage_plan(stage);
    std::optional<Session> init;
    if (!init_path.empty()) {
        if (plan != StagePlan::stage2) throw ConfigError("--init is only meaningful with --stage 2");
        init = load_checkpoint(init_path);
    }
    const Dataset ds = load_dataset(data_dir);
    TrainOutcome r = train_plan(rc.model, rc.train, ds, plan, std::move(init));
    save_checkpoint(r.session, out_path);
    for (const auto& st : r.stages) {
        const auto& last = st.history.back();
        io.out << "stage " << last.stage << ": epochs=" << st.history.size() << " stop=" << st.stop_reason
               << " train_acc=" << last.train_accuracy << " val_loss=" << last.val_loss << "\n";
    }
    io.out << "checkpoint " << out_path << " config_hash " << config_hash(r.session) << "\n";
    if (!history_path.empty()) write_file(history_path, detail::history_json(r.stages).dump(2) + "\n");
    return kExitOk;
}

inline int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& pattern,
                    const std::string& classes, const std::string& report_path, const std::string& csv_path,
                    const std::string& split, CliStreams io) {
    const Presence presence = parse_pattern(pattern);
    std::optional<std::vector<std::size_t>> subset;
    if (!classes.empty()) subset = detail::parse_class_list(classes);
    const std::string ckpt_bytes = read_file(ckpt_path);
    Session s = deserialize_checkpoint(ckpt_bytes);
    const Dataset ds = load_dataset(data_dir);
    if (ds.num_classes != s.model.config.num_classes || ds.dims != s.model.config.input_dims)
        throw ConfigError("dataset classes or feature widths do not match the checkpoint");
    const EvalReport rep = eval_missing(s.model, ds.split(split), presence, subset, ds.class_names);
    nlohmann::json meta{{"timestamp", detail::utc_timestamp()}, {"split", split}, {"data", data_dir}};
    write_file(report_path, report_json(rep, sha256_hex(ckpt_bytes), meta).dump(2) + "\n");
    if (!csv_path.empty()) write_file(csv_path, confusion_csv(rep.confusion, rep.class_names));
    io.out << report_table(rep);
    return kExitOk;
}

inline int cmd_ablate(const std::string& config_path, const std::string& grid_path, const std::string& out_path,
                      const std::string& data_dir, CliStreams io) {
    const RunConfig rc = load_run_config(config_path);
    const AblationGrid grid = parse_grid(read_file(grid_path));
    const Dataset ds = data_dir.empty() ? generate_dataset(rc.synth.value_or(SynthSpec{})) : load_dataset(data_dir);
    const auto rows = run_ablation(rc.model, rc.train, ds, grid);
    write_file(out_path, ablation_csv(rows));
    io.out << "wrote " << rows.size() << " rows to " << out_path << "\n";
    return kExitOk;
}

inline int cmd_gradcheck(std::uint64_t seed, std::size_t configs, CliStreams io) {
    GradcheckOptions opt;
    opt.configs = configs;
    bool ok = true;
    for (const auto& r : run_gradcheck(seed, opt)) {
        io.out << (r.passed ? "ok   " : "FAIL ") << std::left << std::setw(20) << r.suite << " configs=" << r.configs
               << " coords=" << r.coordinates << " max_rel_err=" << std::scientific << std::setprecision(3)
               << r.max_rel_error << std::defaultfloat << " worst=" << (r.worst.empty() ? "-" : r.worst) << "\n";
        ok = ok && r.passed;
    }
    if (!ok) return detail::fail(io.err, "gradcheck", "gradcheck", "relative error above tolerance", kExitValidation);
    return kExitOk;
}

/// Parses argv and runs one command.
inline int run_cli(int argc, const char* const* argv, CliStreams io = {}) {
    CLI::App app{"Multimodal prompt-pool emotion classifier with missing-modality training", "umbe"};
    app.require_subcommand(1);

    std::string spec, out, config, data, stage = "both", init, history, ckpt, pattern, classes, report, csv,
                                          split = "test", grid;
    std::uint64_t seed = 7;
    std::size_t configs = 100;

    auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset directory");
    gen->add_option("--spec", spec, "INI file with a [synth] section")->required();
    gen->add_option("--out", out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train and write a checkpoint");
    train->add_option("--config", config, "Run configuration")->required();
    train->add_option("--data", data, "Dataset directory")->required();
    train->add_option("--out", out, "Checkpoint path")->required();
    train->add_option("--stage", stage, "1, 2 or both")->capture_default_str();
    train->add_option("--init", init, "Stage-1 checkpoint to continue from (with --stage 2)");
    train->add_option("--history", history, "Write per-epoch history as JSON");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint under a presence pattern");
    eval->add_option("--ckpt", ckpt, "Checkpoint path")->required();
    eval->add_option("--data", data, "Dataset directory")->required();
    eval->add_option("--pattern", pattern, "Presence pattern such as VAT, V-T or --T")->required();
    eval->add_option("--classes", classes, "Comma-separated retained class indices");
    eval->add_option("--report", report, "JSON report path")->required();
    eval->add_option("--csv", csv, "Confusion matrix CSV path");
    eval->add_option("--split", split, "train, val or test")->capture_default_str();

    auto* ablate = app.add_subcommand("ablate", "One-stage vs two-stage sweep over pool length/size/top-k");
    ablate->add_option("--config", config, "Run configuration")->required();
    ablate->add_option("--grid", grid, "INI file with a [grid] section")->required();
    ablate->add_option("--out", out, "CSV path")->required();
    ablate->add_option("--data", data, "Dataset directory (default: generate from [synth])");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
    gc->add_option("--seed", seed, "Base seed")->capture_default_str();
    gc->add_option("--configs", configs, "Configurations per suite")->capture_default_str();

    std::string command;
    try {
        app.parse(argc, argv);
        command = app.get_subcommands().front()->get_name();
        if (command == "gen-data") return cmd_gen_data(spec, out, io);
        if (command == "train") return cmd_train(config, data, out, stage, init, history, io);
        if (command == "eval") {
            if (split != "train" && split != "val" && split != "test")
                throw ConfigError("--split must be train, val or test");
            return cmd_eval(ckpt, data, pattern, classes, report, csv, split, io);
        }
        if (command == "ablate") return cmd_ablate(config, grid, out, data, io);
        if (command == "gradcheck") return cmd_gradcheck(seed, configs, io);
        return detail::fail(io.err, "usage", command, "unknown command", kExitValidation);
    } catch (const CLI::Success& e) {
        return app.exit(e, io.out, io.err);
    } catch (const CLI::ParseError& e) {
        return detail::fail(io.err, "usage", command, e.what(), kExitValidation);
    } catch (const IoError& e) {
        return detail::fail(io.err, e.kind(), command, e.what(), kExitIo);
    } catch (const Error& e) {
        return detail::fail(io.err, e.kind(), command, e.what(), kExitValidation);
    } catch (const std::exception& e) {
        return detail::fail(io.err, "internal", command, e.what(), kExitValidation);
    }
}

}  // namespace umbe
