// fincast: quarterly EPS forecasting pipeline driver.
//
// Subcommands cover the pipeline stages:
//   synth       generate synthetic panels in the ingest schema
//   preprocess  fit transforms, build and split samples (variants a and b)
//   train       run the configured repetitions, checkpoint best epochs
//   evaluate    skill scores vs persistent model and analysts, per group
//   report      re-render stored report JSONs as a table

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fincast/cli.hpp"

namespace {

struct CommonFlags {
    std::optional<std::string> config_path;
    std::string profile = "desk";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON configuration file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--profile", flags.profile, "baseline profile: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--set", flags.overrides,
                    "dotted-path config override, e.g. --set train.epochs=5");
    cmd->add_option("--seed", flags.seed, "override the experiment seed");
    cmd->add_option("--jobs", flags.jobs, "parallel training repetitions");
}

fincast::RunConfig resolve(const CommonFlags& flags) {
    return fincast::load_config(flags.config_path, flags.profile, flags.overrides, flags.seed,
                                flags.jobs);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quarterly EPS forecasting with LSTM and TCN models"};
    app.require_subcommand(1);

    CommonFlags synth_flags, pre_flags, train_flags, eval_flags;
    auto* synth = app.add_subcommand("synth", "generate synthetic input files");
    add_common(synth, synth_flags);
    auto* pre = app.add_subcommand("preprocess", "fit transforms and build the sample stores");
    add_common(pre, pre_flags);
    auto* train = app.add_subcommand("train", "train the configured architecture");
    add_common(train, train_flags);
    auto* eval = app.add_subcommand("evaluate", "evaluate checkpoints against the baselines");
    add_common(eval, eval_flags);

    std::vector<std::string> report_paths;
    auto* report = app.add_subcommand("report", "render report JSON files as a table");
    report->add_option("paths", report_paths, "report JSON files")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) fincast::cli::cmd_synth(resolve(synth_flags));
        if (pre->parsed()) fincast::cli::cmd_preprocess(resolve(pre_flags));
        if (train->parsed()) fincast::cli::cmd_train(resolve(train_flags));
        if (eval->parsed()) fincast::cli::cmd_evaluate(resolve(eval_flags));
        if (report->parsed()) fincast::cli::cmd_report(report_paths);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
