#pragma once

#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fincast/models.hpp"
#include "fincast/nn/checkpoint.hpp"
#include "fincast/train.hpp"

namespace fincast {

/// The naive baseline: the current quarter's (transformed) EPS.
inline double persistent_predict(const Sample& sample) { return sample.persistent_prediction; }

inline double mse(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.size() != labels.size()) throw std::invalid_argument("mse: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

/// Skill score: 1 - MSE(model)/MSE(base). Positive beats the baseline.
inline double skill_score(double mse_model, double mse_base) {
    if (mse_base == 0.0) throw std::runtime_error("degenerate baseline");
    return 1.0 - mse_model / mse_base;
}

struct SummaryStat {
    double mean = 0.0;
    double std = 0.0;  // population (1/n)
};

inline SummaryStat summarize(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty input");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return SummaryStat{mean, std::sqrt(var / n)};
}

/// Per-group comparison of the trained repetitions against the persistent
/// model and the analyst consensus, all on the analyst-covered test subset.
struct EvalReport {
    GroupMode group = GroupMode::all;
    std::string model_kind;
    std::size_t n_test_samples = 0;   // after group filter
    std::size_t n_with_analyst = 0;   // comparison subset
    std::vector<double> mse_model;    // one per repetition
    double mse_persistent = 0.0;
    double mse_analyst = 0.0;
    std::vector<double> ss_persistent;
    std::vector<double> ss_analyst;
    std::optional<SummaryStat> mse_model_stat;
    std::optional<SummaryStat> ss_persistent_stat;
    std::optional<SummaryStat> ss_analyst_stat;
    std::string ss_persistent_note;  // set when the baseline is degenerate
    std::string ss_analyst_note;
    std::string value_space = "studentized";  // affine-invariant: SS equals raw-space SS
};

/// Evaluate checkpointed repetitions on the test set restricted to `group`
/// and to samples carrying an analyst forecast, so every MSE covers exactly
/// the same subset. Skill scores are computed per repetition, then summarized
/// with mean and population standard deviation. A zero-MSE baseline yields a
/// note instead of a score; the other comparison is still reported.
template <typename T>
EvalReport evaluate(const ArchitectureSpec& spec, const std::vector<nn::Checkpoint>& checkpoints,
                    const std::vector<Sample>& test, GroupMode group) {
    if (checkpoints.empty()) throw std::invalid_argument("evaluate: no checkpoints");
    const std::vector<Sample> grouped = filter_group(test, group);
    std::vector<Sample> subset;
    for (const auto& s : grouped)
        if (s.analyst_forecast) subset.push_back(s);

    EvalReport report;
    report.group = group;
    report.model_kind = to_string(spec.kind);
    report.n_test_samples = grouped.size();
    report.n_with_analyst = subset.size();
    if (subset.empty()) throw std::runtime_error("no comparable samples");

    std::vector<double> labels, persistent, analyst;
    labels.reserve(subset.size());
    for (const auto& s : subset) {
        labels.push_back(s.label);
        persistent.push_back(persistent_predict(s));
        analyst.push_back(*s.analyst_forecast);
    }
    report.mse_persistent = mse(persistent, labels);
    report.mse_analyst = mse(analyst, labels);

    ModelGraph<T> model = build_model<T>(spec, 0);
    const std::string fingerprint = spec.fingerprint();
    for (const auto& ckpt : checkpoints) {
        nn::restore_params(ckpt, fingerprint, model.params);
        const double m = mse(predict(model, subset), labels);
        report.mse_model.push_back(m);
    }
    report.mse_model_stat = summarize(report.mse_model);

    if (report.mse_persistent == 0.0) {
        report.ss_persistent_note = "degenerate baseline: persistent MSE is zero";
    } else {
        for (double m : report.mse_model)
            report.ss_persistent.push_back(skill_score(m, report.mse_persistent));
        report.ss_persistent_stat = summarize(report.ss_persistent);
    }
    if (report.mse_analyst == 0.0) {
        report.ss_analyst_note = "degenerate baseline: analyst MSE is zero";
    } else {
        for (double m : report.mse_model)
            report.ss_analyst.push_back(skill_score(m, report.mse_analyst));
        report.ss_analyst_stat = summarize(report.ss_analyst);
    }
    return report;
}

// --- serialization and table rendering --------------------------------------

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["group"] = to_string(r.group);
    j["model"] = r.model_kind;
    j["n_test_samples"] = r.n_test_samples;
    j["n_with_analyst"] = r.n_with_analyst;
    j["mse_model"] = r.mse_model;
    j["mse_persistent"] = r.mse_persistent;
    j["mse_analyst"] = r.mse_analyst;
    j["value_space"] = r.value_space;
    auto put_stat = [&j](const char* key, const std::optional<SummaryStat>& stat,
                         const std::vector<double>& per_rep, const std::string& note) {
        nlohmann::json e;
        if (stat) {
            e["mean"] = stat->mean;
            e["std"] = stat->std;
            e["per_repetition"] = per_rep;
        } else {
            e["error"] = note;
        }
        j[key] = std::move(e);
    };
    put_stat("ss_vs_persistent", r.ss_persistent_stat, r.ss_persistent, r.ss_persistent_note);
    put_stat("ss_vs_analyst", r.ss_analyst_stat, r.ss_analyst, r.ss_analyst_note);
    {
        nlohmann::json e;
        e["mean"] = r.mse_model_stat->mean;
        e["std"] = r.mse_model_stat->std;
        j["mse_model_stat"] = std::move(e);
    }
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.group = parse_group_mode(j.at("group").get<std::string>());
    r.model_kind = j.at("model").get<std::string>();
    r.n_test_samples = j.at("n_test_samples").get<std::size_t>();
    r.n_with_analyst = j.at("n_with_analyst").get<std::size_t>();
    r.mse_model = j.at("mse_model").get<std::vector<double>>();
    r.mse_persistent = j.at("mse_persistent").get<double>();
    r.mse_analyst = j.at("mse_analyst").get<double>();
    r.value_space = j.at("value_space").get<std::string>();
    r.mse_model_stat = SummaryStat{j.at("mse_model_stat").at("mean").get<double>(),
                                   j.at("mse_model_stat").at("std").get<double>()};
    auto read_stat = [&j](const char* key, std::optional<SummaryStat>& stat,
                          std::vector<double>& per_rep, std::string& note) {
        const auto& e = j.at(key);
        if (e.contains("error")) {
            note = e.at("error").get<std::string>();
        } else {
            stat = SummaryStat{e.at("mean").get<double>(), e.at("std").get<double>()};
            per_rep = e.at("per_repetition").get<std::vector<double>>();
        }
    };
    read_stat("ss_vs_persistent", r.ss_persistent_stat, r.ss_persistent, r.ss_persistent_note);
    read_stat("ss_vs_analyst", r.ss_analyst_stat, r.ss_analyst, r.ss_analyst_note);
    return r;
}

namespace eval_detail {
inline std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}
inline std::string fmt_stat(const std::optional<SummaryStat>& stat) {
    if (!stat) return "n/a";
    return fmt(stat->mean) + " +/- " + fmt(stat->std);
}
}  // namespace eval_detail

/// Plain-text table, one row per report; pure function of the reports.
inline std::string render_report_table(const std::vector<EvalReport>& reports) {
    using eval_detail::fmt;
    using eval_detail::fmt_stat;
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"group", "model", "n", "n_analyst", "mse_model", "ss_vs_persistent",
                    "ss_vs_analyst"});
    for (const auto& r : reports)
        rows.push_back({to_string(r.group), r.model_kind, std::to_string(r.n_test_samples),
                        std::to_string(r.n_with_analyst), fmt_stat(r.mse_model_stat),
                        fmt_stat(r.ss_persistent_stat), fmt_stat(r.ss_analyst_stat)});
    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    std::ostringstream out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            out << std::left << std::setw(static_cast<int>(widths[c]) + 2) << rows[i][c];
        }
        out << "\n";
        if (i == 0) {
            for (std::size_t c = 0; c < widths.size(); ++c)
                out << std::string(widths[c], '-') << "  ";
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace fincast
