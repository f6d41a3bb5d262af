#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fincast/domain.hpp"
#include "fincast/ingest.hpp"
#include "fincast/io.hpp"
#include "fincast/models.hpp"
#include "fincast/preprocess.hpp"
#include "fincast/train.hpp"

namespace fincast {

/// One experiment, fully described: schema, generator, preprocessing, the two
/// split variants, architecture, training and evaluation settings.
struct RunConfig {
    std::string run_dir = "runs/default";
    std::string quarterly_path;  // default: <run_dir>/data/quarterly.csv
    std::string daily_path;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    SchemaConfig schema;
    SyntheticConfig synthetic;
    PreprocessConfig preprocess;
    SplitSpec split_a{Date{2012, 1, 1}, Date{2016, 12, 31}, 0.10, 6};
    std::optional<SplitSpec> split_b_override;  // default: A extended by 6 months
    std::string variant = "b";                  // store used by train/evaluate
    ArchitectureSpec architecture;
    GroupMode group = GroupMode::all;  // cohort restriction applied at preprocess
    std::vector<GroupMode> eval_groups = {GroupMode::all, GroupMode::nofin, GroupMode::onlyfin};
    TrainConfig train;

    /// Dataset B: the training period extended by half a year, test after.
    SplitSpec split_b() const {
        if (split_b_override) return *split_b_override;
        SplitSpec b = split_a;
        b.train_label_end = period_end_after(split_a.train_label_end, 6);
        return b;
    }

    SplitSpec split_for(const std::string& v) const {
        if (v == "a") return split_a;
        if (v == "b") return split_b();
        throw std::invalid_argument("unknown split variant: " + v);
    }

    std::string data_quarterly() const {
        return quarterly_path.empty() ? run_dir + "/data/quarterly.csv" : quarterly_path;
    }
    std::string data_daily() const {
        return daily_path.empty() ? run_dir + "/data/daily.csv" : daily_path;
    }
    std::string store_dir(const std::string& v) const { return run_dir + "/store/" + v; }
    std::string train_dir() const { return run_dir + "/runs/" + to_string(architecture.kind); }
    std::string reports_dir() const { return run_dir + "/reports"; }

    void validate() const {
        if (run_dir.empty()) throw std::invalid_argument("config: run_dir must be set");
        schema.validate();
        synthetic.validate(preprocess.window + preprocess.horizon);
        preprocess.validate();
        split_a.validate();
        split_b().validate();
        train.validate();
        if (variant != "a" && variant != "b")
            throw std::invalid_argument("config: variant must be 'a' or 'b'");
        if (eval_groups.empty()) throw std::invalid_argument("config: eval_groups must not be empty");
    }
};

namespace config_detail {

inline void merge_json(nlohmann::json& base, const nlohmann::json& overlay) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (const auto& [key, value] : overlay.items()) {
        if (base.contains(key) && base[key].is_object() && value.is_object())
            merge_json(base[key], value);
        else
            base[key] = value;
    }
}

/// `a.b.c=value` with the value parsed as JSON when possible, else a string.
inline void apply_dotted_override(nlohmann::json& j, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like path.to.key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    nlohmann::json* cursor = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw std::invalid_argument("bad override path: " + path);
        if (dot == std::string::npos) {
            (*cursor)[key] = std::move(value);
            return;
        }
        cursor = &(*cursor)[key];
        start = dot + 1;
    }
}

}  // namespace config_detail

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["run_dir"] = c.run_dir;
    if (!c.quarterly_path.empty()) j["quarterly_path"] = c.quarterly_path;
    if (!c.daily_path.empty()) j["daily_path"] = c.daily_path;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["variant"] = c.variant;
    j["group"] = to_string(c.group);
    {
        nlohmann::json groups = nlohmann::json::array();
        for (auto g : c.eval_groups) groups.push_back(to_string(g));
        j["eval_groups"] = std::move(groups);
    }
    j["schema"] = {{"delimiter", std::string(1, c.schema.delimiter)},
                   {"missing_token", c.schema.missing_token},
                   {"quarterly_firm", c.schema.quarterly_firm},
                   {"quarterly_date", c.schema.quarterly_date},
                   {"quarterly_group", c.schema.quarterly_group},
                   {"quarterly_analyst", c.schema.quarterly_analyst},
                   {"daily_firm", c.schema.daily_firm},
                   {"daily_date", c.schema.daily_date},
                   {"quarterly_features", c.schema.features.quarterly_names},
                   {"daily_features", c.schema.features.daily_names},
                   {"eps_index", c.schema.features.eps_index},
                   {"assets_index", c.schema.features.assets_index}};
    j["synthetic"] = {{"n_firms", c.synthetic.n_firms},
                      {"n_quarters", c.synthetic.n_quarters},
                      {"ar_coefficient", c.synthetic.ar_coefficient},
                      {"seasonal_amplitude", c.synthetic.seasonal_amplitude},
                      {"noise_std", c.synthetic.noise_std},
                      {"analyst_noise_std", c.synthetic.analyst_noise_std},
                      {"missing_rate", c.synthetic.missing_rate},
                      {"start_year", c.synthetic.start_year},
                      {"days_per_quarter", c.synthetic.days_per_quarter}};
    j["preprocess"] = {{"window", c.preprocess.window},
                       {"horizon", c.preprocess.horizon},
                       {"max_gap", c.preprocess.max_gap},
                       {"daily_steps", c.preprocess.daily_steps},
                       {"percentile_low", c.preprocess.percentile_low},
                       {"percentile_high", c.preprocess.percentile_high}};
    auto split_json = [](const SplitSpec& s) {
        return nlohmann::json{{"train_label_start", format_date(s.train_label_start)},
                              {"train_label_end", format_date(s.train_label_end)},
                              {"validation_fraction", s.validation_fraction},
                              {"test_months", s.test_months}};
    };
    j["split_a"] = split_json(c.split_a);
    if (c.split_b_override) j["split_b"] = split_json(*c.split_b_override);
    j["architecture"] = {{"kind", to_string(c.architecture.kind)},
                         {"lstm_hidden1", c.architecture.lstm_hidden1},
                         {"lstm_hidden2", c.architecture.lstm_hidden2},
                         {"shares_tower", c.architecture.shares_tower},
                         {"head", c.architecture.head},
                         {"tcn_filters", c.architecture.tcn.filters},
                         {"tcn_kernel", c.architecture.tcn.kernel},
                         {"tcn_dilations", c.architecture.tcn.dilations},
                         {"post_tcn_dense", c.architecture.post_tcn_dense}};
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"dropout", c.train.dropout},
                  {"repetitions", c.train.repetitions},
                  {"learning_rate", c.train.learning_rate},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"epsilon", c.train.epsilon},
                  {"precision", c.train.precision == TrainConfig::Precision::f32 ? "f32" : "f64"}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.run_dir = j.at("run_dir").get<std::string>();
    if (j.contains("quarterly_path")) c.quarterly_path = j.at("quarterly_path").get<std::string>();
    if (j.contains("daily_path")) c.daily_path = j.at("daily_path").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.jobs = j.at("jobs").get<std::size_t>();
    c.variant = j.at("variant").get<std::string>();
    c.group = parse_group_mode(j.at("group").get<std::string>());
    c.eval_groups.clear();
    for (const auto& g : j.at("eval_groups")) c.eval_groups.push_back(parse_group_mode(g.get<std::string>()));
    {
        const auto& s = j.at("schema");
        const std::string delim = s.at("delimiter").get<std::string>();
        if (delim.size() != 1) throw std::invalid_argument("schema: delimiter must be one character");
        c.schema.delimiter = delim[0];
        c.schema.missing_token = s.at("missing_token").get<std::string>();
        c.schema.quarterly_firm = s.at("quarterly_firm").get<std::string>();
        c.schema.quarterly_date = s.at("quarterly_date").get<std::string>();
        c.schema.quarterly_group = s.at("quarterly_group").get<std::string>();
        c.schema.quarterly_analyst = s.at("quarterly_analyst").get<std::string>();
        c.schema.daily_firm = s.at("daily_firm").get<std::string>();
        c.schema.daily_date = s.at("daily_date").get<std::string>();
        c.schema.features.quarterly_names = s.at("quarterly_features").get<std::vector<std::string>>();
        c.schema.features.daily_names = s.at("daily_features").get<std::vector<std::string>>();
        c.schema.features.eps_index = s.at("eps_index").get<std::size_t>();
        c.schema.features.assets_index = s.at("assets_index").get<std::size_t>();
    }
    {
        const auto& s = j.at("synthetic");
        c.synthetic.n_firms = s.at("n_firms").get<std::size_t>();
        c.synthetic.n_quarters = s.at("n_quarters").get<std::size_t>();
        c.synthetic.ar_coefficient = s.at("ar_coefficient").get<double>();
        c.synthetic.seasonal_amplitude = s.at("seasonal_amplitude").get<double>();
        c.synthetic.noise_std = s.at("noise_std").get<double>();
        c.synthetic.analyst_noise_std = s.at("analyst_noise_std").get<double>();
        c.synthetic.missing_rate = s.at("missing_rate").get<double>();
        c.synthetic.start_year = s.at("start_year").get<int>();
        c.synthetic.days_per_quarter = s.at("days_per_quarter").get<std::size_t>();
        c.synthetic.seed = c.seed;
    }
    {
        const auto& p = j.at("preprocess");
        c.preprocess.window = p.at("window").get<std::size_t>();
        c.preprocess.horizon = p.at("horizon").get<std::size_t>();
        c.preprocess.max_gap = p.at("max_gap").get<std::size_t>();
        c.preprocess.daily_steps = p.at("daily_steps").get<std::size_t>();
        c.preprocess.percentile_low = p.at("percentile_low").get<double>();
        c.preprocess.percentile_high = p.at("percentile_high").get<double>();
    }
    auto split_of = [](const nlohmann::json& s) {
        return SplitSpec{parse_date(s.at("train_label_start").get<std::string>()),
                         parse_date(s.at("train_label_end").get<std::string>()),
                         s.at("validation_fraction").get<double>(),
                         s.at("test_months").get<int>()};
    };
    c.split_a = split_of(j.at("split_a"));
    if (j.contains("split_b")) c.split_b_override = split_of(j.at("split_b"));
    {
        const auto& a = j.at("architecture");
        c.architecture.kind = parse_kind(a.at("kind").get<std::string>());
        c.architecture.lstm_hidden1 = a.at("lstm_hidden1").get<std::size_t>();
        c.architecture.lstm_hidden2 = a.at("lstm_hidden2").get<std::size_t>();
        c.architecture.shares_tower = a.at("shares_tower").get<std::vector<std::size_t>>();
        c.architecture.head = a.at("head").get<std::vector<std::size_t>>();
        c.architecture.tcn.filters = a.at("tcn_filters").get<std::size_t>();
        c.architecture.tcn.kernel = a.at("tcn_kernel").get<std::size_t>();
        c.architecture.tcn.dilations = a.at("tcn_dilations").get<std::vector<std::size_t>>();
        c.architecture.post_tcn_dense = a.at("post_tcn_dense").get<std::size_t>();
    }
    {
        const auto& t = j.at("train");
        c.train.batch_size = t.at("batch_size").get<std::size_t>();
        c.train.epochs = t.at("epochs").get<std::size_t>();
        c.train.dropout = t.at("dropout").get<double>();
        c.train.repetitions = t.at("repetitions").get<std::size_t>();
        c.train.learning_rate = t.at("learning_rate").get<double>();
        c.train.beta1 = t.at("beta1").get<double>();
        c.train.beta2 = t.at("beta2").get<double>();
        c.train.epsilon = t.at("epsilon").get<double>();
        const std::string prec = t.at("precision").get<std::string>();
        if (prec == "f32")
            c.train.precision = TrainConfig::Precision::f32;
        else if (prec == "f64")
            c.train.precision = TrainConfig::Precision::f64;
        else
            throw std::invalid_argument("train: precision must be f32 or f64");
        c.train.seed = c.seed;
    }
    // derived wiring: window dims follow the preprocess section
    c.architecture.window = c.preprocess.window;
    c.architecture.quarterly_features = c.schema.features.quarterly_count();
    c.architecture.shares_dim = c.preprocess.daily_steps * c.schema.features.daily_count();
    c.architecture.dropout = c.train.dropout;
    return c;
}

/// Baseline configuration for a profile. "paper" carries the published
/// training protocol (batch 1024, 1000 epochs, dropout 0.3, five repetitions);
/// "desk" is sized to finish a full synthetic experiment in minutes.
inline nlohmann::json default_config_json(const std::string& profile = "desk") {
    RunConfig c;  // struct defaults = paper-scale protocol
    c.train.batch_size = 1024;
    c.train.epochs = 1000;
    c.train.dropout = 0.3;
    c.train.repetitions = 5;
    nlohmann::json j = config_to_json(c);
    if (profile == "desk") {
        j["train"]["epochs"] = 50;
        j["train"]["repetitions"] = 3;
        j["synthetic"]["n_firms"] = 200;
        j["synthetic"]["n_quarters"] = 40;
    } else if (profile != "paper") {
        throw std::invalid_argument("unknown profile: " + profile + " (expected desk or paper)");
    }
    return j;
}

/// Assemble the effective config: profile defaults, then the config file,
/// then dotted-path overrides; a FINCAST_RUN_ROOT environment variable
/// prefixes relative run directories.
inline RunConfig load_config(const std::optional<std::string>& config_path,
                             const std::string& profile,
                             const std::vector<std::string>& overrides = {},
                             std::optional<std::uint64_t> seed_flag = std::nullopt,
                             std::optional<std::size_t> jobs_flag = std::nullopt) {
    nlohmann::json j = default_config_json(profile);
    if (config_path) {
        nlohmann::json file = nlohmann::json::parse(read_file(*config_path));
        config_detail::merge_json(j, file);
    }
    if (seed_flag) j["seed"] = *seed_flag;
    if (jobs_flag) j["jobs"] = *jobs_flag;
    for (const auto& o : overrides) config_detail::apply_dotted_override(j, o);

    RunConfig c = config_from_json(j);
    if (const char* root = std::getenv("FINCAST_RUN_ROOT"); root && *root) {
        const std::filesystem::path dir(c.run_dir);
        if (dir.is_relative()) c.run_dir = (std::filesystem::path(root) / dir).string();
    }
    c.validate();
    return c;
}

}  // namespace fincast
