#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fincast/io.hpp"
#include "fincast/nn/adam.hpp"

namespace fincast::nn {

/// Frozen parameter snapshot. Values are held as doubles, which represents
/// both f32 and f64 tensors exactly; the precision tag records the source.
struct Checkpoint {
    std::string fingerprint;
    std::string precision;  // "f32" | "f64"
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>> params;
};

template <typename T>
Checkpoint snapshot_params(const std::string& fingerprint, const std::vector<Parameter<T>>& params) {
    Checkpoint ckpt;
    ckpt.fingerprint = fingerprint;
    ckpt.precision = sizeof(T) == 4 ? "f32" : "f64";
    for (const auto& p : params) {
        std::vector<double> vals(p.tensor.values().begin(), p.tensor.values().end());
        ckpt.params[p.name] = {p.tensor.shape(), std::move(vals)};
    }
    return ckpt;
}

/// Write snapshot values back into a live parameter set. Rejects checkpoints
/// taken from a different architecture.
template <typename T>
void restore_params(const Checkpoint& ckpt, const std::string& fingerprint,
                    std::vector<Parameter<T>>& params) {
    if (ckpt.fingerprint != fingerprint)
        throw std::runtime_error("checkpoint fingerprint mismatch: expected '" + fingerprint +
                                 "', file has '" + ckpt.fingerprint + "'");
    for (auto& p : params) {
        auto it = ckpt.params.find(p.name);
        if (it == ckpt.params.end())
            throw std::runtime_error("checkpoint missing parameter " + p.name);
        if (it->second.first != p.tensor.shape())
            throw std::runtime_error("checkpoint shape mismatch for " + p.name);
        auto& dst = p.tensor.values();
        const auto& src = it->second.second;
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src[i]);
    }
}

inline nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json j;
    j["fingerprint"] = ckpt.fingerprint;
    j["precision"] = ckpt.precision;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, entry] : ckpt.params)
        params[name] = {{"shape", entry.first}, {"values", entry.second}};
    j["params"] = std::move(params);
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint ckpt;
    ckpt.fingerprint = j.at("fingerprint").get<std::string>();
    ckpt.precision = j.at("precision").get<std::string>();
    for (const auto& [name, entry] : j.at("params").items())
        ckpt.params[name] = {entry.at("shape").get<std::vector<std::size_t>>(),
                             entry.at("values").get<std::vector<double>>()};
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file_atomic(path, checkpoint_to_json(ckpt).dump());
}

inline Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace fincast::nn
