#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fincast/domain.hpp"

namespace fincast {

namespace sum_detail {
/// Neumaier-compensated sum; keeps the studentized-pool mean residual far
/// below the 1e-9 gate even on large pools.
inline double compensated_sum(const std::vector<double>& v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}
}  // namespace sum_detail

struct StudentizeStats {
    double mean = 0.0;
    double population_std = 0.0;  // 1/n divisor
};

inline StudentizeStats fit_studentize(const std::vector<double>& values) {
    if (values.size() < 2) throw std::invalid_argument("studentize: need at least 2 values");
    const bool constant =
        std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
    if (constant) throw std::invalid_argument("studentize: zero variance");
    const double n = static_cast<double>(values.size());
    const double mean = sum_detail::compensated_sum(values) / n;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double c = values[i] - mean;
        sq[i] = c * c;
    }
    const double var = sum_detail::compensated_sum(sq) / n;
    StudentizeStats stats{mean, std::sqrt(var)};
    if (stats.population_std == 0.0) throw std::invalid_argument("studentize: zero variance");
    return stats;
}

inline double studentize_value(double x, const StudentizeStats& stats) {
    return (x - stats.mean) / stats.population_std;
}

inline std::vector<double> apply_studentize(const std::vector<double>& values,
                                            const StudentizeStats& stats) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = studentize_value(values[i], stats);
    return out;
}

struct ClipBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Percentile with linear interpolation between order statistics:
/// rank r = p/100 * (n-1), value interpolated between floor(r) and ceil(r).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile: empty input");
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    if (lo == hi) return sorted[lo];
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline ClipBounds fit_clip_bounds(std::vector<double> values, double low_pct = 1.0,
                                  double high_pct = 99.0) {
    if (values.empty()) throw std::invalid_argument("clip bounds: empty input");
    if (!(low_pct < high_pct)) throw std::invalid_argument("clip bounds: low percentile must be below high");
    std::sort(values.begin(), values.end());
    return ClipBounds{percentile_sorted(values, low_pct), percentile_sorted(values, high_pct)};
}

inline double clip(double x, const ClipBounds& bounds) {
    return std::min(std::max(x, bounds.lower), bounds.upper);
}

/// Eq.-style asset scaling: x / max(1, total assets).
inline double scale_by_assets(double x, double total_assets) {
    if (!std::isfinite(x) || !std::isfinite(total_assets))
        throw std::invalid_argument("scale_by_assets: non-finite input");
    return x / std::max(1.0, total_assets);
}

struct PreprocessConfig {
    std::size_t window = 20;       // F, quarters per pattern
    std::size_t horizon = 1;       // h, quarters ahead
    std::size_t max_gap = 1;       // longest run of missing quarters to interpolate
    std::size_t daily_steps = 20;  // trading days per market window
    double percentile_low = 1.0;
    double percentile_high = 99.0;

    void validate() const {
        if (window == 0 || horizon == 0 || daily_steps == 0)
            throw std::invalid_argument("preprocess: window, horizon and daily_steps must be positive");
        if (!(percentile_low < percentile_high))
            throw std::invalid_argument("preprocess: percentile_low must be below percentile_high");
    }
};

/// Fill interior runs of <= max_gap consecutive gaps linearly between the
/// surrounding observed values; leading/trailing gaps and longer runs stay.
inline void interpolate_column(std::vector<Cell>& column, std::size_t max_gap) {
    std::optional<std::size_t> last_obs;
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (!column[i]) continue;
        if (last_obs && i - *last_obs > 1 && i - *last_obs - 1 <= max_gap) {
            const double left = *column[*last_obs];
            const double right = *column[i];
            const double span = static_cast<double>(i - *last_obs);
            for (std::size_t j = *last_obs + 1; j < i; ++j)
                column[j] = left + (right - left) * static_cast<double>(j - *last_obs) / span;
        }
        last_obs = i;
    }
}

struct InterpolationResult {
    FirmPanel panel;
    // residual gaps per (quarter index, feature column) after interpolation
    std::vector<std::vector<bool>> missing;

    /// A window of quarters [from, to] is usable only if no residual gap
    /// remains anywhere inside it.
    bool window_ok(std::size_t from, std::size_t to) const {
        for (std::size_t i = from; i <= to; ++i)
            for (bool m : missing[i])
                if (m) return false;
        return true;
    }
};

/// Gap interpolation over a panel's quarterly feature cells. Only the feature
/// vectors are filled; the eps/total_assets mirrors keep their observed values
/// so labels are never synthesized.
inline InterpolationResult interpolate_gaps(const FirmPanel& panel, std::size_t max_gap) {
    InterpolationResult result{panel, {}};
    const std::size_t nq = panel.quarters.size();
    const std::size_t cols = nq == 0 ? 0 : panel.quarters[0].features.size();
    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<Cell> column(nq);
        for (std::size_t i = 0; i < nq; ++i) column[i] = panel.quarters[i].features[c];
        interpolate_column(column, max_gap);
        for (std::size_t i = 0; i < nq; ++i) result.panel.quarters[i].features[c] = column[i];
    }
    result.missing.assign(nq, std::vector<bool>(cols, false));
    for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            result.missing[i][c] = !result.panel.quarters[i].features[c].has_value();
    return result;
}

/// Frozen transform set: clip bounds and per-column studentization statistics
/// fitted on records dated at or before the cutoff, then reused verbatim for
/// validation and test. Degenerate feature columns are dropped and recorded.
struct TransformSet {
    PreprocessConfig config;
    Date cutoff;
    FeatureInfo features;
    ClipBounds clip_bounds;
    std::vector<std::optional<StudentizeStats>> quarterly_stats;  // nullopt = dropped
    std::vector<std::optional<StudentizeStats>> daily_stats;

    std::vector<std::size_t> retained_quarterly() const {
        std::vector<std::size_t> idx;
        for (std::size_t c = 0; c < quarterly_stats.size(); ++c)
            if (quarterly_stats[c]) idx.push_back(c);
        return idx;
    }
    std::vector<std::size_t> retained_daily() const {
        std::vector<std::size_t> idx;
        for (std::size_t c = 0; c < daily_stats.size(); ++c)
            if (daily_stats[c]) idx.push_back(c);
        return idx;
    }
    std::vector<std::string> dropped_columns() const {
        std::vector<std::string> names;
        for (std::size_t c = 0; c < quarterly_stats.size(); ++c)
            if (!quarterly_stats[c]) names.push_back(features.quarterly_names[c]);
        for (std::size_t c = 0; c < daily_stats.size(); ++c)
            if (!daily_stats[c]) names.push_back(features.daily_names[c]);
        return names;
    }

    /// Position of the EPS column among retained quarterly columns.
    std::size_t eps_position() const {
        std::size_t pos = 0;
        for (std::size_t c = 0; c < features.eps_index; ++c)
            if (quarterly_stats[c]) ++pos;
        return pos;
    }

    const StudentizeStats& eps_stats() const { return *quarterly_stats[features.eps_index]; }

    /// The label chain: scale by the label quarter's assets, clip, studentize.
    double transform_eps(double raw_eps, double raw_assets) const {
        return studentize_value(clip(scale_by_assets(raw_eps, raw_assets), clip_bounds), eps_stats());
    }
};

namespace preprocess_detail {

inline bool all_equal(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

/// Scaled (and, for the EPS column, clipped) per-column cell matrix of one
/// panel's quarters. A missing assets cell gaps the whole row, since no cell
/// of that row can be scaled.
inline std::vector<std::vector<Cell>> scaled_columns(const FirmPanel& panel,
                                                     const FeatureInfo& info,
                                                     const ClipBounds* eps_clip) {
    const std::size_t nq = panel.quarters.size();
    const std::size_t cols = info.quarterly_count();
    std::vector<std::vector<Cell>> out(cols, std::vector<Cell>(nq));
    for (std::size_t i = 0; i < nq; ++i) {
        const auto& rec = panel.quarters[i];
        if (rec.features.size() != cols)
            throw std::invalid_argument("panel " + panel.firm + ": expected " +
                                        std::to_string(cols) + " quarterly features, got " +
                                        std::to_string(rec.features.size()));
        const Cell assets = rec.features[info.assets_index];
        if (!assets) continue;
        for (std::size_t c = 0; c < cols; ++c) {
            const Cell& cell = rec.features[c];
            if (!cell) continue;
            double v = scale_by_assets(*cell, *assets);
            if (c == info.eps_index && eps_clip) v = clip(v, *eps_clip);
            out[c][i] = v;
        }
    }
    return out;
}

}  // namespace preprocess_detail

/// Fit the full transform set on records dated <= cutoff: clip bounds on the
/// scaled EPS pool first, then per-column studentization on the scaled (and
/// clipped, for EPS) pools. Nothing dated after the cutoff is read.
inline TransformSet fit_pipeline(const std::vector<FirmPanel>& panels, const Date& cutoff,
                                 const PreprocessConfig& config, const FeatureInfo& info) {
    config.validate();
    info.validate();
    if (panels.empty()) throw std::invalid_argument("fit_pipeline: no training panels");

    TransformSet t;
    t.config = config;
    t.cutoff = cutoff;
    t.features = info;

    const std::size_t qcols = info.quarterly_count();
    std::vector<std::vector<double>> qpool(qcols);
    for (const auto& panel : panels)
        for (const auto& rec : panel.quarters) {
            if (!(rec.report_date <= cutoff)) continue;
            const Cell assets = rec.features.size() > info.assets_index
                                    ? rec.features[info.assets_index]
                                    : Cell{};
            if (!assets) continue;
            for (std::size_t c = 0; c < qcols && c < rec.features.size(); ++c)
                if (rec.features[c]) qpool[c].push_back(scale_by_assets(*rec.features[c], *assets));
        }

    if (qpool[info.eps_index].empty())
        throw std::runtime_error("fit_pipeline: no EPS observations before cutoff");
    t.clip_bounds =
        fit_clip_bounds(qpool[info.eps_index], config.percentile_low, config.percentile_high);
    for (double& v : qpool[info.eps_index]) v = clip(v, t.clip_bounds);

    t.quarterly_stats.resize(qcols);
    for (std::size_t c = 0; c < qcols; ++c) {
        auto& pool = qpool[c];
        if (pool.size() < 2 || preprocess_detail::all_equal(pool)) {
            if (c == info.eps_index)
                throw std::runtime_error("fit_pipeline: zero variance in EPS column");
            t.quarterly_stats[c] = std::nullopt;  // dropped
        } else {
            t.quarterly_stats[c] = fit_studentize(pool);
        }
    }

    const std::size_t dcols = info.daily_count();
    std::vector<std::vector<double>> dpool(dcols);
    for (const auto& panel : panels)
        for (const auto& rec : panel.days) {
            if (!(rec.date <= cutoff)) continue;
            for (std::size_t c = 0; c < dcols && c < rec.features.size(); ++c)
                if (rec.features[c]) dpool[c].push_back(*rec.features[c]);
        }
    t.daily_stats.resize(dcols);
    for (std::size_t c = 0; c < dcols; ++c) {
        auto& pool = dpool[c];
        if (pool.size() < 2 || preprocess_detail::all_equal(pool))
            t.daily_stats[c] = std::nullopt;
        else
            t.daily_stats[c] = fit_studentize(pool);
    }
    if (t.retained_daily().empty())
        throw std::runtime_error("fit_pipeline: every daily column is degenerate");

    return t;
}

/// Build every supervised sample a panel supports under the frozen transforms:
/// scale -> clip EPS -> interpolate gaps -> studentize, then cut windows of
/// `window` quarters with a label `horizon` quarters ahead and attach the
/// `daily_steps` most recent market days at or before the anchor date.
/// Windows touching residual gaps, anchors without enough market history, and
/// label quarters without observed EPS and assets yield no sample.
inline std::vector<Sample> build_samples(const FirmPanel& panel, const TransformSet& t) {
    const auto& config = t.config;
    const auto& info = t.features;
    const std::size_t nq = panel.quarters.size();
    std::vector<Sample> out;
    if (nq < config.window + config.horizon) return out;

    auto cols = preprocess_detail::scaled_columns(panel, info, &t.clip_bounds);
    for (std::size_t c = 0; c < cols.size(); ++c) interpolate_column(cols[c], config.max_gap);

    const auto retained_q = t.retained_quarterly();
    const auto retained_d = t.retained_daily();
    const std::size_t eps_pos = t.eps_position();

    // studentize retained columns in place
    for (std::size_t c : retained_q) {
        const auto& stats = *t.quarterly_stats[c];
        for (auto& cell : cols[c])
            if (cell) cell = studentize_value(*cell, stats);
    }

    for (std::size_t anchor = config.window - 1; anchor + config.horizon < nq; ++anchor) {
        const std::size_t label_idx = anchor + config.horizon;
        const auto& label_rec = panel.quarters[label_idx];
        if (!label_rec.eps || !label_rec.total_assets) continue;

        const std::size_t first = anchor + 1 - config.window;
        bool ok = true;
        for (std::size_t i = first; i <= anchor && ok; ++i)
            for (std::size_t c : retained_q)
                if (!cols[c][i]) {
                    ok = false;
                    break;
                }
        if (!ok) continue;

        const Date anchor_date = panel.quarters[anchor].report_date;

        // market window: last daily_steps records dated <= anchor_date
        auto day_end = std::upper_bound(
            panel.days.begin(), panel.days.end(), anchor_date,
            [](const Date& d, const DailyRecord& rec) { return d < rec.date; });
        const std::size_t n_days = static_cast<std::size_t>(day_end - panel.days.begin());
        if (n_days < config.daily_steps) continue;

        std::vector<double> market;
        market.reserve(config.daily_steps * retained_d.size());
        bool market_ok = true;
        for (std::size_t i = n_days - config.daily_steps; i < n_days && market_ok; ++i) {
            const auto& day = panel.days[i];
            for (std::size_t c : retained_d) {
                if (c >= day.features.size() || !day.features[c]) {
                    market_ok = false;
                    break;
                }
                market.push_back(studentize_value(*day.features[c], *t.daily_stats[c]));
            }
        }
        if (!market_ok) continue;

        Sample s;
        s.firm = panel.firm;
        s.group = panel.quarters[anchor].group;
        s.anchor_date = anchor_date;
        s.label_date = label_rec.report_date;
        s.window_rows = config.window;
        s.window_cols = retained_q.size();
        s.quarter_window.reserve(config.window * retained_q.size());
        for (std::size_t i = first; i <= anchor; ++i)
            for (std::size_t c : retained_q) s.quarter_window.push_back(*cols[c][i]);
        s.market_window = std::move(market);
        s.label = t.transform_eps(*label_rec.eps, *label_rec.total_assets);
        s.persistent_prediction =
            s.quarter_window[(config.window - 1) * retained_q.size() + eps_pos];
        if (panel.quarters[anchor].analyst_mean_eps)
            s.analyst_forecast =
                t.transform_eps(*panel.quarters[anchor].analyst_mean_eps, *label_rec.total_assets);
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Sample> build_samples(const std::vector<FirmPanel>& panels,
                                         const TransformSet& t) {
    std::vector<Sample> out;
    for (const auto& panel : panels) {
        auto samples = build_samples(panel, t);
        out.insert(out.end(), std::make_move_iterator(samples.begin()),
                   std::make_move_iterator(samples.end()));
    }
    return out;
}

// --- JSON round trip -------------------------------------------------------

inline nlohmann::json transforms_to_json(const TransformSet& t) {
    nlohmann::json j;
    j["config"] = {{"window", t.config.window},
                   {"horizon", t.config.horizon},
                   {"max_gap", t.config.max_gap},
                   {"daily_steps", t.config.daily_steps},
                   {"percentile_low", t.config.percentile_low},
                   {"percentile_high", t.config.percentile_high}};
    j["cutoff"] = format_date(t.cutoff);
    j["clip"] = {{"lower", t.clip_bounds.lower}, {"upper", t.clip_bounds.upper}};
    j["eps_index"] = t.features.eps_index;
    j["assets_index"] = t.features.assets_index;
    auto stats_array = [](const std::vector<std::string>& names,
                          const std::vector<std::optional<StudentizeStats>>& stats) {
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t c = 0; c < stats.size(); ++c) {
            nlohmann::json e;
            e["name"] = names[c];
            if (stats[c]) {
                e["mean"] = stats[c]->mean;
                e["std"] = stats[c]->population_std;
            } else {
                e["dropped"] = true;
            }
            arr.push_back(std::move(e));
        }
        return arr;
    };
    j["quarterly"] = stats_array(t.features.quarterly_names, t.quarterly_stats);
    j["daily"] = stats_array(t.features.daily_names, t.daily_stats);
    return j;
}

inline TransformSet transforms_from_json(const nlohmann::json& j) {
    TransformSet t;
    const auto& c = j.at("config");
    t.config.window = c.at("window").get<std::size_t>();
    t.config.horizon = c.at("horizon").get<std::size_t>();
    t.config.max_gap = c.at("max_gap").get<std::size_t>();
    t.config.daily_steps = c.at("daily_steps").get<std::size_t>();
    t.config.percentile_low = c.at("percentile_low").get<double>();
    t.config.percentile_high = c.at("percentile_high").get<double>();
    t.cutoff = parse_date(j.at("cutoff").get<std::string>());
    t.clip_bounds = {j.at("clip").at("lower").get<double>(), j.at("clip").at("upper").get<double>()};
    t.features.eps_index = j.at("eps_index").get<std::size_t>();
    t.features.assets_index = j.at("assets_index").get<std::size_t>();
    auto read_stats = [](const nlohmann::json& arr, std::vector<std::string>& names,
                         std::vector<std::optional<StudentizeStats>>& stats) {
        for (const auto& e : arr) {
            names.push_back(e.at("name").get<std::string>());
            if (e.contains("dropped") && e.at("dropped").get<bool>())
                stats.push_back(std::nullopt);
            else
                stats.push_back(StudentizeStats{e.at("mean").get<double>(), e.at("std").get<double>()});
        }
    };
    read_stats(j.at("quarterly"), t.features.quarterly_names, t.quarterly_stats);
    read_stats(j.at("daily"), t.features.daily_names, t.daily_stats);
    return t;
}

}  // namespace fincast
