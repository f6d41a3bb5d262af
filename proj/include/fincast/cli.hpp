#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fincast/config.hpp"
#include "fincast/eval.hpp"
#include "fincast/store.hpp"

namespace fincast::cli {

inline void write_config_snapshot(const RunConfig& config) {
    write_file_atomic(config.run_dir + "/config.json", config_to_json(config).dump(2) + "\n");
}

/// `synth`: generate the synthetic panels and write them in the ingest schema,
/// plus a manifest carrying the generator seed.
inline void cmd_synth(const RunConfig& config, std::ostream& log = std::cout) {
    config.validate();
    auto panels = generate_synthetic(config.synthetic, config.schema.features);
    write_panels(panels, config.data_quarterly(), config.data_daily(), config.schema);
    std::size_t n_quarters = 0, n_days = 0;
    for (const auto& p : panels) {
        n_quarters += p.quarters.size();
        n_days += p.days.size();
    }
    nlohmann::json manifest = {{"seed", config.synthetic.seed},
                               {"n_firms", panels.size()},
                               {"quarterly_rows", n_quarters},
                               {"daily_rows", n_days},
                               {"quarterly_path", config.data_quarterly()},
                               {"daily_path", config.data_daily()}};
    write_file_atomic(config.run_dir + "/data/manifest.json", manifest.dump(2) + "\n");
    write_config_snapshot(config);
    log << "synth: " << panels.size() << " firms, " << n_quarters << " quarterly rows, " << n_days
        << " daily rows -> " << config.data_quarterly() << "\n";
}

/// `preprocess`: fit the frozen transforms on each variant's training period,
/// build and split the samples, and persist both stores.
inline void cmd_preprocess(const RunConfig& config, std::ostream& log = std::cout) {
    config.validate();
    const auto panels = load_panels(config.data_quarterly(), config.data_daily(), config.schema);
    for (const std::string variant : {std::string("a"), std::string("b")}) {
        const SplitSpec split = config.split_for(variant);
        const TransformSet transforms =
            fit_pipeline(panels, split.train_label_end, config.preprocess, config.schema.features);
        for (const auto& name : transforms.dropped_columns())
            log << "preprocess[" << variant << "]: dropped degenerate column " << name << "\n";
        std::vector<Sample> samples = build_samples(panels, transforms);
        samples = filter_group(samples, config.group);
        SampleStore store{variant, split_temporal(samples, split)};
        const std::string dir = config.store_dir(variant);
        write_file_atomic(dir + "/transforms.json", transforms_to_json(transforms).dump(2) + "\n");
        save_store(store, dir + "/samples.json");
        log << "preprocess[" << variant << "]: train " << store.split.train.size() << ", validation "
            << store.split.validation.size() << ", test " << store.split.test.size() << " -> " << dir
            << "\n";
    }
    write_config_snapshot(config);
}

/// Architecture dims follow the transform set actually fitted (degenerate
/// columns may shrink the inputs).
inline ArchitectureSpec effective_architecture(const RunConfig& config,
                                               const TransformSet& transforms) {
    ArchitectureSpec spec = config.architecture;
    spec.window = config.preprocess.window;
    spec.quarterly_features = transforms.retained_quarterly().size();
    spec.shares_dim = config.preprocess.daily_steps * transforms.retained_daily().size();
    spec.dropout = config.train.dropout;
    spec.validate();
    return spec;
}

inline TransformSet load_transforms(const RunConfig& config) {
    return transforms_from_json(
        nlohmann::json::parse(read_file(config.store_dir(config.variant) + "/transforms.json")));
}

/// `train`: run the configured repetitions on the selected store variant and
/// write per-repetition checkpoints, histories and a manifest.
inline void cmd_train(const RunConfig& config, std::ostream& log = std::cout) {
    config.validate();
    const TransformSet transforms = load_transforms(config);
    const SampleStore store = load_store(config.store_dir(config.variant) + "/samples.json");
    const ArchitectureSpec spec = effective_architecture(config, transforms);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RepetitionResult> results;
    if (config.train.precision == TrainConfig::Precision::f32)
        results = run_repetitions<float>(spec, store.split.train, store.split.validation,
                                         config.train, config.jobs);
    else
        results = run_repetitions<double>(spec, store.split.train, store.split.validation,
                                          config.train, config.jobs);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string dir = config.train_dir();
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["kind"] = to_string(spec.kind);
    manifest["variant"] = config.variant;
    manifest["fingerprint"] = spec.fingerprint();
    manifest["wall_clock_s"] = wall;
    manifest["repetitions"] = nlohmann::json::array();
    std::size_t n_ok = 0;
    for (const auto& r : results) {
        const std::string rep_dir = dir + "/rep_" + std::to_string(r.repetition);
        nlohmann::json entry = {{"repetition", r.repetition}, {"seed", r.seed}, {"success", r.success}};
        if (r.success) {
            ++n_ok;
            nn::save_checkpoint(r.checkpoint, rep_dir + "/checkpoint.json");
            write_file_atomic(rep_dir + "/history.json", history_to_json(r.history).dump() + "\n");
            entry["best_epoch"] = r.history.best_epoch;
            entry["best_validation_loss"] = r.history.best_validation_loss;
            log << "train[" << to_string(spec.kind) << "] rep " << r.repetition << ": best epoch "
                << r.history.best_epoch << ", validation " << r.history.best_validation_loss << "\n";
        } else {
            entry["error"] = r.error;
            log << "train[" << to_string(spec.kind) << "] rep " << r.repetition << ": FAILED ("
                << r.error << ")\n";
        }
        manifest["repetitions"].push_back(std::move(entry));
    }
    write_file_atomic(dir + "/manifest.json", manifest.dump(2) + "\n");
    write_config_snapshot(config);
    if (n_ok == 0) throw std::runtime_error("train: every repetition failed");
}

inline std::vector<nn::Checkpoint> load_run_checkpoints(const RunConfig& config) {
    const std::string dir = config.train_dir();
    const nlohmann::json manifest = nlohmann::json::parse(read_file(dir + "/manifest.json"));
    std::vector<nn::Checkpoint> checkpoints;
    for (const auto& entry : manifest.at("repetitions"))
        if (entry.at("success").get<bool>())
            checkpoints.push_back(nn::load_checkpoint(
                dir + "/rep_" + std::to_string(entry.at("repetition").get<std::size_t>()) +
                "/checkpoint.json"));
    if (checkpoints.empty())
        throw std::runtime_error("evaluate: no successful checkpoints under " + dir);
    return checkpoints;
}

/// `evaluate`: score every requested group on the test partition and write
/// one report JSON per group plus a rendered table.
inline std::vector<EvalReport> cmd_evaluate(const RunConfig& config, std::ostream& log = std::cout) {
    config.validate();
    const TransformSet transforms = load_transforms(config);
    const SampleStore store = load_store(config.store_dir(config.variant) + "/samples.json");
    const ArchitectureSpec spec = effective_architecture(config, transforms);
    const auto checkpoints = load_run_checkpoints(config);

    std::vector<EvalReport> reports;
    for (GroupMode group : config.eval_groups) {
        EvalReport report;
        if (config.train.precision == TrainConfig::Precision::f32)
            report = evaluate<float>(spec, checkpoints, store.split.test, group);
        else
            report = evaluate<double>(spec, checkpoints, store.split.test, group);
        write_file_atomic(config.reports_dir() + "/report_" + to_string(spec.kind) + "_" +
                              to_string(group) + ".json",
                          report_to_json(report).dump(2) + "\n");
        reports.push_back(std::move(report));
    }
    const std::string table = render_report_table(reports);
    write_file_atomic(config.reports_dir() + "/report_" + to_string(spec.kind) + ".txt", table);
    log << table;
    write_config_snapshot(config);
    return reports;
}

/// `report`: re-render stored report JSONs as the aligned text table.
inline std::string cmd_report(const std::vector<std::string>& report_paths,
                              std::ostream& log = std::cout) {
    std::vector<EvalReport> reports;
    for (const auto& path : report_paths)
        reports.push_back(report_from_json(nlohmann::json::parse(read_file(path))));
    const std::string table = render_report_table(reports);
    log << table;
    return table;
}

}  // namespace fincast::cli
