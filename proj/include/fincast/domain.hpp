#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fincast/date.hpp"

namespace fincast {

using FirmId = std::string;

enum class Group { financial, nonfinancial };

inline std::string to_string(Group g) { return g == Group::financial ? "financial" : "nonfinancial"; }

inline Group parse_group(const std::string& s) {
    if (s == "financial") return Group::financial;
    if (s == "nonfinancial") return Group::nonfinancial;
    throw std::invalid_argument("unknown group label: " + s);
}

/// Missing numeric cells are first-class gaps, never sentinel values.
using Cell = std::optional<double>;

/// Shared feature vocabulary: column names plus where the EPS and total-assets
/// columns sit inside the quarterly feature vector.
struct FeatureInfo {
    std::vector<std::string> quarterly_names;
    std::vector<std::string> daily_names;
    std::size_t eps_index = 0;
    std::size_t assets_index = 1;

    std::size_t quarterly_count() const { return quarterly_names.size(); }
    std::size_t daily_count() const { return daily_names.size(); }

    void validate() const {
        if (quarterly_names.empty() || daily_names.empty())
            throw std::invalid_argument("feature info: empty column list");
        if (eps_index >= quarterly_names.size() || assets_index >= quarterly_names.size())
            throw std::invalid_argument("feature info: eps/assets index out of range");
        if (eps_index == assets_index)
            throw std::invalid_argument("feature info: eps and assets must be distinct columns");
    }

    static FeatureInfo defaults() {
        FeatureInfo info;
        info.quarterly_names = {"eps", "assets"};
        for (int i = 3; i <= 19; ++i) info.quarterly_names.push_back("f" + two_digits(i));
        info.daily_names = {"ret", "prc", "vol", "shrout", "vwretd"};
        for (int i = 6; i <= 11; ++i) info.daily_names.push_back("d" + two_digits(i));
        return info;
    }

private:
    static std::string two_digits(int i) { return (i < 10 ? "0" : "") + std::to_string(i); }
};

/// One fiscal quarter of one firm. eps and total_assets mirror the feature
/// cells at eps_index/assets_index; the mirrors exist so label construction
/// and asset scaling do not depend on column layout.
struct QuarterlyRecord {
    FirmId firm;
    Date report_date;
    Cell eps;
    Cell total_assets;
    std::vector<Cell> features;
    Group group = Group::nonfinancial;
    Cell analyst_mean_eps;
};

struct DailyRecord {
    FirmId firm;
    Date date;
    std::vector<Cell> features;
};

/// One firm's time-ordered quarterly and daily records.
struct FirmPanel {
    FirmId firm;
    std::vector<QuarterlyRecord> quarters;
    std::vector<DailyRecord> days;

    void validate() const {
        if (firm.empty()) throw std::invalid_argument("panel: empty firm id");
        for (std::size_t i = 0; i < quarters.size(); ++i) {
            if (quarters[i].firm != firm) throw std::invalid_argument("panel: mixed firm ids");
            if (i > 0 && !(quarters[i - 1].report_date < quarters[i].report_date))
                throw std::invalid_argument("panel " + firm + ": quarterly dates not strictly increasing");
        }
        for (std::size_t i = 0; i < days.size(); ++i) {
            if (days[i].firm != firm) throw std::invalid_argument("panel: mixed firm ids");
            if (i > 0 && !(days[i - 1].date < days[i].date))
                throw std::invalid_argument("panel " + firm + ": daily dates not strictly increasing");
        }
    }
};

/// One supervised example, fully preprocessed. quarter_window is row-major
/// [window_rows x window_cols] with the last row at the anchor quarter;
/// market_window is day-major chronological. label and persistent_prediction
/// went through the identical transform chain.
struct Sample {
    FirmId firm;
    Group group = Group::nonfinancial;
    Date anchor_date;
    Date label_date;
    std::size_t window_rows = 0;
    std::size_t window_cols = 0;
    std::vector<double> quarter_window;
    std::vector<double> market_window;
    double label = 0.0;
    double persistent_prediction = 0.0;
    std::optional<double> analyst_forecast;
};

struct SplitSpec {
    Date train_label_start;
    Date train_label_end;
    double validation_fraction = 0.10;
    int test_months = 6;

    void validate() const {
        if (!(train_label_start < train_label_end))
            throw std::invalid_argument("split: train_label_start must precede train_label_end");
        if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
            throw std::invalid_argument("split: validation_fraction must be in (0,1)");
        if (test_months <= 0) throw std::invalid_argument("split: test span must be positive");
    }

    /// Last label date of the test window, covering the `test_months`
    /// calendar months that follow train_label_end.
    Date test_end() const { return period_end_after(train_label_end, test_months); }
};

enum class GroupMode { all, nofin, onlyfin };

inline std::string to_string(GroupMode m) {
    switch (m) {
        case GroupMode::all: return "all";
        case GroupMode::nofin: return "nofin";
        case GroupMode::onlyfin: return "onlyfin";
    }
    throw std::logic_error("unreachable");
}

inline GroupMode parse_group_mode(const std::string& s) {
    if (s == "all") return GroupMode::all;
    if (s == "nofin") return GroupMode::nofin;
    if (s == "onlyfin") return GroupMode::onlyfin;
    throw std::invalid_argument("unknown group mode: " + s);
}

struct SampleSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
};

/// Temporal split by label date. Train and validation cover labels inside
/// [train_label_start, train_label_end]; validation is the chronologically
/// last ceil(fraction * n) of them (ties broken by firm id); test covers
/// (train_label_end, train_label_end + test span]. Input order never matters:
/// everything is sorted before slicing.
inline SampleSplit split_temporal(const std::vector<Sample>& samples, const SplitSpec& spec) {
    spec.validate();
    if (samples.empty()) throw std::runtime_error("insufficient samples for split");

    auto chrono_less = [](const Sample& a, const Sample& b) {
        if (a.label_date != b.label_date) return a.label_date < b.label_date;
        if (a.firm != b.firm) return a.firm < b.firm;
        return a.anchor_date < b.anchor_date;
    };

    SampleSplit out;
    std::vector<Sample> in_window;
    const Date test_end = spec.test_end();
    for (const auto& s : samples) {
        if (spec.train_label_start <= s.label_date && s.label_date <= spec.train_label_end)
            in_window.push_back(s);
        else if (spec.train_label_end < s.label_date && s.label_date <= test_end)
            out.test.push_back(s);
    }
    std::sort(in_window.begin(), in_window.end(), chrono_less);
    std::sort(out.test.begin(), out.test.end(), chrono_less);

    const std::size_t n_val = static_cast<std::size_t>(
        std::ceil(spec.validation_fraction * static_cast<double>(in_window.size())));
    const std::size_t n_train = in_window.size() - n_val;
    out.train.assign(in_window.begin(), in_window.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(in_window.begin() + static_cast<std::ptrdiff_t>(n_train), in_window.end());

    if (out.train.empty() || out.test.empty())
        throw std::runtime_error("insufficient samples for split");
    return out;
}

inline bool group_matches(Group g, GroupMode mode) {
    switch (mode) {
        case GroupMode::all: return true;
        case GroupMode::nofin: return g == Group::nonfinancial;
        case GroupMode::onlyfin: return g == Group::financial;
    }
    throw std::logic_error("unreachable");
}

/// Order-preserving cohort filter.
inline std::vector<Sample> filter_group(const std::vector<Sample>& samples, GroupMode mode) {
    std::vector<Sample> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        if (group_matches(s.group, mode)) out.push_back(s);
    return out;
}

}  // namespace fincast
