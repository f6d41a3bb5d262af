#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fincast/domain.hpp"
#include "fincast/io.hpp"

namespace fincast {

inline nlohmann::json sample_to_json(const Sample& s) {
    nlohmann::json j;
    j["firm"] = s.firm;
    j["group"] = to_string(s.group);
    j["anchor_date"] = format_date(s.anchor_date);
    j["label_date"] = format_date(s.label_date);
    j["rows"] = s.window_rows;
    j["cols"] = s.window_cols;
    j["quarter_window"] = s.quarter_window;
    j["market_window"] = s.market_window;
    j["label"] = s.label;
    j["persistent"] = s.persistent_prediction;
    if (s.analyst_forecast)
        j["analyst"] = *s.analyst_forecast;
    else
        j["analyst"] = nullptr;
    return j;
}

inline Sample sample_from_json(const nlohmann::json& j) {
    Sample s;
    s.firm = j.at("firm").get<std::string>();
    s.group = parse_group(j.at("group").get<std::string>());
    s.anchor_date = parse_date(j.at("anchor_date").get<std::string>());
    s.label_date = parse_date(j.at("label_date").get<std::string>());
    s.window_rows = j.at("rows").get<std::size_t>();
    s.window_cols = j.at("cols").get<std::size_t>();
    s.quarter_window = j.at("quarter_window").get<std::vector<double>>();
    s.market_window = j.at("market_window").get<std::vector<double>>();
    s.label = j.at("label").get<double>();
    s.persistent_prediction = j.at("persistent").get<double>();
    if (!j.at("analyst").is_null()) s.analyst_forecast = j.at("analyst").get<double>();
    return s;
}

/// Train/validation/test partitions of one split variant, as written by the
/// preprocess stage and consumed by train and evaluate.
struct SampleStore {
    std::string variant;  // "a" | "b"
    SampleSplit split;
};

inline void save_store(const SampleStore& store, const std::string& path) {
    nlohmann::json j;
    j["variant"] = store.variant;
    auto dump = [](const std::vector<Sample>& samples) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : samples) arr.push_back(sample_to_json(s));
        return arr;
    };
    j["train"] = dump(store.split.train);
    j["validation"] = dump(store.split.validation);
    j["test"] = dump(store.split.test);
    write_file_atomic(path, j.dump());
}

inline SampleStore load_store(const std::string& path) {
    const nlohmann::json j = nlohmann::json::parse(read_file(path));
    SampleStore store;
    store.variant = j.at("variant").get<std::string>();
    auto read = [](const nlohmann::json& arr) {
        std::vector<Sample> out;
        out.reserve(arr.size());
        for (const auto& e : arr) out.push_back(sample_from_json(e));
        return out;
    };
    store.split.train = read(j.at("train"));
    store.split.validation = read(j.at("validation"));
    store.split.test = read(j.at("test"));
    return store;
}

}  // namespace fincast
