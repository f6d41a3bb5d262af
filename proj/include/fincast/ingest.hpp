#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fincast/date.hpp"
#include "fincast/domain.hpp"
#include "fincast/io.hpp"
#include "fincast/rng.hpp"

namespace fincast {

/// Column mapping for the delimited quarterly and daily input files.
/// firm, report_date and every feature column are mandatory in the header;
/// group and analyst columns are optional (group defaults to nonfinancial).
struct SchemaConfig {
    char delimiter = ',';
    std::string missing_token;  // empty field by default
    std::string quarterly_firm = "firm";
    std::string quarterly_date = "report_date";
    std::string quarterly_group = "group";
    std::string quarterly_analyst = "analyst_mean_eps";
    std::string daily_firm = "firm";
    std::string daily_date = "date";
    FeatureInfo features = FeatureInfo::defaults();

    void validate() const {
        features.validate();
        auto check_unique = [](std::vector<std::string> cols, const char* which) {
            std::sort(cols.begin(), cols.end());
            if (std::adjacent_find(cols.begin(), cols.end()) != cols.end())
                throw std::invalid_argument(std::string("schema: duplicate column in ") + which);
        };
        std::vector<std::string> q = {quarterly_firm, quarterly_date, quarterly_group, quarterly_analyst};
        q.insert(q.end(), features.quarterly_names.begin(), features.quarterly_names.end());
        check_unique(q, "quarterly schema");
        std::vector<std::string> d = {daily_firm, daily_date};
        d.insert(d.end(), features.daily_names.begin(), features.daily_names.end());
        check_unique(d, "daily schema");
    }
};

namespace csv_detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

inline double parse_number(const std::string& field, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v))
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number '" +
                                 field + "'");
    return v;
}

inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct HeaderIndex {
    std::unordered_map<std::string, std::size_t> by_name;
    std::size_t width = 0;

    std::size_t require(const std::string& name, const std::string& path) const {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error(path + ": schema error: missing mandatory column '" + name + "'");
        return it->second;
    }
    std::optional<std::size_t> find(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) return std::nullopt;
        return it->second;
    }
};

inline HeaderIndex read_header(std::istream& in, char delim, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    HeaderIndex idx;
    auto cols = split_line(line, delim);
    idx.width = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) idx.by_name[cols[i]] = i;
    return idx;
}

}  // namespace csv_detail

/// Load the quarterly and daily files into per-firm panels, sorted by date.
/// Missing cells (the schema's missing token) become explicit gaps.
inline std::vector<FirmPanel> load_panels(const std::string& quarterly_path,
                                          const std::string& daily_path,
                                          const SchemaConfig& schema) {
    schema.validate();
    using namespace csv_detail;
    std::map<FirmId, FirmPanel> panels;

    auto cell_of = [&schema](const std::string& field, const std::string& path,
                             std::size_t line_no) -> Cell {
        if (field == schema.missing_token) return std::nullopt;
        return parse_number(field, path, line_no);
    };

    {
        std::ifstream in(quarterly_path);
        if (!in) throw std::runtime_error("cannot open " + quarterly_path);
        const HeaderIndex hdr = read_header(in, schema.delimiter, quarterly_path);
        const std::size_t firm_col = hdr.require(schema.quarterly_firm, quarterly_path);
        const std::size_t date_col = hdr.require(schema.quarterly_date, quarterly_path);
        const auto group_col = hdr.find(schema.quarterly_group);
        const auto analyst_col = hdr.find(schema.quarterly_analyst);
        std::vector<std::size_t> feature_cols;
        for (const auto& name : schema.features.quarterly_names)
            feature_cols.push_back(hdr.require(name, quarterly_path));

        std::string line;
        for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
            if (line.empty()) continue;
            const auto fields = split_line(line, schema.delimiter);
            if (fields.size() != hdr.width)
                throw std::runtime_error(quarterly_path + ":" + std::to_string(line_no) +
                                         ": malformed row (expected " + std::to_string(hdr.width) +
                                         " fields, got " + std::to_string(fields.size()) + ")");
            QuarterlyRecord rec;
            rec.firm = fields[firm_col];
            if (rec.firm.empty())
                throw std::runtime_error(quarterly_path + ":" + std::to_string(line_no) +
                                         ": empty firm id");
            rec.report_date = parse_date(fields[date_col]);
            if (group_col) rec.group = parse_group(fields[*group_col]);
            if (analyst_col)
                rec.analyst_mean_eps = cell_of(fields[*analyst_col], quarterly_path, line_no);
            rec.features.reserve(feature_cols.size());
            for (std::size_t c : feature_cols)
                rec.features.push_back(cell_of(fields[c], quarterly_path, line_no));
            rec.eps = rec.features[schema.features.eps_index];
            rec.total_assets = rec.features[schema.features.assets_index];
            auto& panel = panels[rec.firm];
            panel.firm = rec.firm;
            panel.quarters.push_back(std::move(rec));
        }
    }
    {
        std::ifstream in(daily_path);
        if (!in) throw std::runtime_error("cannot open " + daily_path);
        const HeaderIndex hdr = read_header(in, schema.delimiter, daily_path);
        const std::size_t firm_col = hdr.require(schema.daily_firm, daily_path);
        const std::size_t date_col = hdr.require(schema.daily_date, daily_path);
        std::vector<std::size_t> feature_cols;
        for (const auto& name : schema.features.daily_names)
            feature_cols.push_back(hdr.require(name, daily_path));

        std::string line;
        for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
            if (line.empty()) continue;
            const auto fields = split_line(line, schema.delimiter);
            if (fields.size() != hdr.width)
                throw std::runtime_error(daily_path + ":" + std::to_string(line_no) +
                                         ": malformed row (expected " + std::to_string(hdr.width) +
                                         " fields, got " + std::to_string(fields.size()) + ")");
            DailyRecord rec;
            rec.firm = fields[firm_col];
            if (rec.firm.empty())
                throw std::runtime_error(daily_path + ":" + std::to_string(line_no) +
                                         ": empty firm id");
            rec.date = parse_date(fields[date_col]);
            rec.features.reserve(feature_cols.size());
            for (std::size_t c : feature_cols)
                rec.features.push_back(cell_of(fields[c], daily_path, line_no));
            auto& panel = panels[rec.firm];
            panel.firm = rec.firm;
            panel.days.push_back(std::move(rec));
        }
    }

    std::vector<FirmPanel> out;
    out.reserve(panels.size());
    for (auto& [firm, panel] : panels) {
        std::sort(panel.quarters.begin(), panel.quarters.end(),
                  [](const auto& a, const auto& b) { return a.report_date < b.report_date; });
        std::sort(panel.days.begin(), panel.days.end(),
                  [](const auto& a, const auto& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < panel.quarters.size(); ++i)
            if (panel.quarters[i - 1].report_date == panel.quarters[i].report_date)
                throw std::runtime_error("duplicate record: firm " + firm + " at " +
                                         format_date(panel.quarters[i].report_date));
        for (std::size_t i = 1; i < panel.days.size(); ++i)
            if (panel.days[i - 1].date == panel.days[i].date)
                throw std::runtime_error("duplicate record: firm " + firm + " at " +
                                         format_date(panel.days[i].date));
        out.push_back(std::move(panel));
    }
    return out;
}

/// Inverse of load_panels; numbers are written in shortest round-trip form.
inline void write_panels(const std::vector<FirmPanel>& panels, const std::string& quarterly_path,
                         const std::string& daily_path, const SchemaConfig& schema) {
    schema.validate();
    using namespace csv_detail;
    const char d = schema.delimiter;

    std::ostringstream q;
    q << schema.quarterly_firm << d << schema.quarterly_date << d << schema.quarterly_group << d
      << schema.quarterly_analyst;
    for (const auto& name : schema.features.quarterly_names) q << d << name;
    q << "\n";
    for (const auto& panel : panels)
        for (const auto& rec : panel.quarters) {
            q << rec.firm << d << format_date(rec.report_date) << d << to_string(rec.group) << d
              << (rec.analyst_mean_eps ? format_number(*rec.analyst_mean_eps) : schema.missing_token);
            for (const auto& cell : rec.features)
                q << d << (cell ? format_number(*cell) : schema.missing_token);
            q << "\n";
        }
    write_file_atomic(quarterly_path, q.str());

    std::ostringstream dy;
    dy << schema.daily_firm << d << schema.daily_date;
    for (const auto& name : schema.features.daily_names) dy << d << name;
    dy << "\n";
    for (const auto& panel : panels)
        for (const auto& rec : panel.days) {
            dy << rec.firm << d << format_date(rec.date);
            for (const auto& cell : rec.features)
                dy << d << (cell ? format_number(*cell) : schema.missing_token);
            dy << "\n";
        }
    write_file_atomic(daily_path, dy.str());
}

/// Synthetic panel generator: per-firm AR(1) EPS with additive 4-quarter
/// seasonality, derived fundamentals that carry the latent state, random-walk
/// daily series, and noisy analyst consensus on the next quarter's EPS.
/// Identical seeds produce bit-identical panels.
struct SyntheticConfig {
    std::size_t n_firms = 200;
    std::size_t n_quarters = 40;
    double ar_coefficient = 0.6;
    double seasonal_amplitude = 0.5;
    double noise_std = 0.1;
    double analyst_noise_std = 0.15;
    double missing_rate = 0.02;
    std::uint64_t seed = 1;
    int start_year = 2008;
    std::size_t days_per_quarter = 63;

    void validate(std::size_t min_quarters = 21) const {
        if (n_firms == 0) throw std::invalid_argument("synthetic: n_firms must be positive");
        if (n_quarters < min_quarters)
            throw std::invalid_argument("synthetic: n_quarters must be at least " +
                                        std::to_string(min_quarters) +
                                        " (window size + horizon)");
        if (ar_coefficient <= -1.0 || ar_coefficient >= 1.0)
            throw std::invalid_argument("synthetic: ar_coefficient must be in (-1,1)");
        if (seasonal_amplitude < 0.0) throw std::invalid_argument("synthetic: negative seasonal amplitude");
        if (noise_std < 0.0 || analyst_noise_std < 0.0)
            throw std::invalid_argument("synthetic: negative noise std");
        if (missing_rate < 0.0 || missing_rate >= 1.0)
            throw std::invalid_argument("synthetic: missing_rate must be in [0,1)");
        if (days_per_quarter == 0 || days_per_quarter > 90)
            throw std::invalid_argument("synthetic: days_per_quarter must be in [1,90]");
    }
};

inline std::vector<FirmPanel> generate_synthetic(const SyntheticConfig& cfg,
                                                 const FeatureInfo& info = FeatureInfo::defaults()) {
    cfg.validate();
    info.validate();
    Rng rng(cfg.seed);

    const std::size_t nq_cols = info.quarterly_count();
    const std::size_t nd_cols = info.daily_count();

    // fixed per-column loadings on the latent state, drawn once
    struct Loading {
        double on_eps, on_prev, on_season, on_level, noise;
    };
    std::vector<Loading> loadings(nq_cols);
    for (std::size_t c = 0; c < nq_cols; ++c)
        loadings[c] = {rng.uniform(0.2, 1.0), rng.uniform(-0.5, 0.5), rng.uniform(-0.8, 0.8),
                       rng.uniform(-0.5, 0.5), rng.uniform(0.02, 0.1)};

    auto seasonal = [&cfg](std::size_t q) {
        switch (q % 4) {
            case 1: return cfg.seasonal_amplitude;
            case 3: return -cfg.seasonal_amplitude;
            default: return 0.0;
        }
    };

    int id_width = 1;
    for (std::size_t n = cfg.n_firms; n >= 10; n /= 10) ++id_width;

    std::vector<FirmPanel> panels;
    panels.reserve(cfg.n_firms);
    for (std::size_t f = 0; f < cfg.n_firms; ++f) {
        FirmPanel panel;
        {
            std::ostringstream id;
            id << "F";
            std::string num = std::to_string(f + 1);
            id << std::string(static_cast<std::size_t>(id_width) > num.size()
                                  ? static_cast<std::size_t>(id_width) - num.size()
                                  : 0,
                              '0')
               << num;
            panel.firm = id.str();
        }
        const Group group = (f % 3 == 2) ? Group::financial : Group::nonfinancial;
        const double level = rng.normal(0.0, 0.3);  // enters derived features only
        double eps_prev = rng.normal(0.0, cfg.noise_std);
        double assets = std::exp(rng.normal(0.4, 0.4));

        std::vector<double> eps_series(cfg.n_quarters);
        panel.quarters.reserve(cfg.n_quarters);
        for (std::size_t q = 0; q < cfg.n_quarters; ++q) {
            const double s = seasonal(q);
            const double eps = cfg.ar_coefficient * eps_prev + s + rng.normal(0.0, cfg.noise_std);
            assets *= std::exp(rng.normal(0.0, 0.02));
            eps_series[q] = eps;

            QuarterlyRecord rec;
            rec.firm = panel.firm;
            rec.group = group;
            rec.report_date =
                quarter_end(cfg.start_year + static_cast<int>(q / 4), static_cast<int>(q % 4) + 1);
            rec.features.assign(nq_cols, Cell{});
            for (std::size_t c = 0; c < nq_cols; ++c) {
                if (c == info.eps_index) {
                    rec.features[c] = eps;
                } else if (c == info.assets_index) {
                    rec.features[c] = assets;
                } else {
                    const auto& w = loadings[c];
                    rec.features[c] = assets * (w.on_eps * eps + w.on_prev * eps_prev +
                                                w.on_season * s + w.on_level * level +
                                                rng.normal(0.0, w.noise));
                }
            }
            rec.eps = rec.features[info.eps_index];
            rec.total_assets = rec.features[info.assets_index];
            panel.quarters.push_back(std::move(rec));
            eps_prev = eps;
        }

        // analyst consensus at quarter q estimates eps at q+1
        for (std::size_t q = 0; q + 1 < cfg.n_quarters; ++q)
            panel.quarters[q].analyst_mean_eps =
                eps_series[q + 1] + rng.normal(0.0, cfg.analyst_noise_std);

        if (cfg.missing_rate > 0.0)
            for (auto& rec : panel.quarters) {
                for (auto& cell : rec.features)
                    if (rng.bernoulli(cfg.missing_rate)) cell.reset();
                if (rec.analyst_mean_eps && rng.bernoulli(cfg.missing_rate))
                    rec.analyst_mean_eps.reset();
                rec.eps = rec.features[info.eps_index];
                rec.total_assets = rec.features[info.assets_index];
            }

        // daily market series: random walks with firm-level drift
        std::vector<double> walk(nd_cols), drift(nd_cols);
        for (std::size_t c = 0; c < nd_cols; ++c) {
            walk[c] = rng.normal(0.0, 1.0);
            drift[c] = rng.normal(0.0, 0.002);
        }
        panel.days.reserve(cfg.n_quarters * cfg.days_per_quarter);
        for (std::size_t q = 0; q < cfg.n_quarters; ++q) {
            const Date qend =
                quarter_end(cfg.start_year + static_cast<int>(q / 4), static_cast<int>(q % 4) + 1);
            for (std::size_t di = 0; di < cfg.days_per_quarter; ++di) {
                DailyRecord rec;
                rec.firm = panel.firm;
                rec.date = add_days(qend, -static_cast<std::int64_t>(cfg.days_per_quarter - 1 - di));
                rec.features.assign(nd_cols, Cell{});
                for (std::size_t c = 0; c < nd_cols; ++c) {
                    walk[c] += drift[c] + rng.normal(0.0, 0.05);
                    rec.features[c] = walk[c];
                }
                panel.days.push_back(std::move(rec));
            }
        }
        panel.validate();
        panels.push_back(std::move(panel));
    }
    return panels;
}

}  // namespace fincast
