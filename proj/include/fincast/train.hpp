#pragma once

#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fincast/models.hpp"
#include "fincast/nn/checkpoint.hpp"

namespace fincast {

struct TrainConfig {
    std::size_t batch_size = 1024;
    std::size_t epochs = 1000;
    double dropout = 0.3;
    std::size_t repetitions = 5;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    enum class Precision { f32, f64 } precision = Precision::f32;

    void validate() const {
        if (batch_size == 0 || epochs == 0 || repetitions == 0)
            throw std::invalid_argument("train: batch_size, epochs and repetitions must be positive");
        if (dropout < 0.0 || dropout >= 1.0)
            throw std::invalid_argument("train: dropout must be in [0,1)");
    }
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::size_t best_epoch = 0;
    double best_validation_loss = std::numeric_limits<double>::infinity();
};

/// Earliest epoch attaining the minimum validation loss.
inline std::size_t select_best_epoch(const std::vector<double>& validation_losses) {
    if (validation_losses.empty()) throw std::invalid_argument("select_best_epoch: empty history");
    std::size_t best = 0;
    for (std::size_t i = 1; i < validation_losses.size(); ++i)
        if (validation_losses[i] < validation_losses[best]) best = i;
    return best;
}

/// Per-epoch shuffle order, reproducible from (seed, epoch) alone.
inline std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                                  std::size_t epoch) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(mix_seed(mix_seed(seed, 0x5f1e), epoch));
    rng.shuffle(idx);
    return idx;
}

/// Validation / test MSE in eval mode, accumulated in double.
template <typename T>
double evaluate_mse(ModelGraph<T>& model, const std::vector<Sample>& samples,
                    std::size_t chunk = 1024) {
    if (samples.empty()) throw std::invalid_argument("evaluate_mse: no samples");
    const nn::Mode saved = model.mode;
    model.mode = nn::Mode::eval;
    const std::vector<double> preds = predict(model, samples, chunk);
    model.mode = saved;
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = preds[i] - samples[i].label;
        acc += d * d;
    }
    return acc / static_cast<double>(samples.size());
}

/// Mini-batch Adam/MSE training: per epoch, shuffle with an epoch-derived
/// seed, consume every batch (final partial batch included), then score the
/// validation set in eval mode. Returns the parameters of the best validation
/// epoch (earliest on ties), never the final ones.
template <typename T>
std::pair<nn::Checkpoint, TrainHistory> train_model(ModelGraph<T>& model,
                                                    const std::vector<Sample>& train,
                                                    const std::vector<Sample>& validation,
                                                    const TrainConfig& config) {
    config.validate();
    if (train.empty() || validation.empty())
        throw std::invalid_argument("train_model: train and validation sets must be non-empty");
    model.spec.dropout = config.dropout;

    const nn::AdamConfig adam{config.learning_rate, config.beta1, config.beta2, config.epsilon};
    const std::string fingerprint = model.spec.fingerprint();
    const std::size_t n = train.size();

    TrainHistory history;
    nn::Checkpoint best;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto perm = epoch_permutation(n, config.seed, epoch);
        Rng dropout_rng(mix_seed(mix_seed(config.seed, 0xd09), epoch));
        model.mode = nn::Mode::train;
        double sq_sum = 0.0;
        for (std::size_t start = 0, batch_index = 0; start < n; start += config.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const std::size_t b = end - start;

            const std::size_t qn = model.spec.window * model.spec.quarterly_features;
            std::vector<T> q(b * qn), s(b * model.spec.shares_dim), y(b);
            for (std::size_t i = 0; i < b; ++i) {
                const Sample& sample = train[perm[start + i]];
                for (std::size_t j = 0; j < qn; ++j)
                    q[i * qn + j] = static_cast<T>(sample.quarter_window[j]);
                for (std::size_t j = 0; j < model.spec.shares_dim; ++j)
                    s[i * model.spec.shares_dim + j] = static_cast<T>(sample.market_window[j]);
                y[i] = static_cast<T>(sample.label);
            }
            auto quarters = nn::Tensor<T>::from_values(
                {b, model.spec.window, model.spec.quarterly_features}, std::move(q));
            auto shares = nn::Tensor<T>::from_values({b, model.spec.shares_dim}, std::move(s));
            auto labels = nn::Tensor<T>::from_values({b}, std::move(y));

            nn::Tensor<T> loss = nn::mse_loss(model_forward(model, quarters, shares, &dropout_rng), labels);
            const double loss_value = static_cast<double>(loss.item());
            if (!std::isfinite(loss_value))
                throw std::runtime_error("non-finite training loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_index));
            loss.backward();
            nn::adam_step(model.params, adam);
            sq_sum += loss_value * static_cast<double>(b);
        }
        history.train_loss.push_back(sq_sum / static_cast<double>(n));

        model.mode = nn::Mode::eval;
        const double val = evaluate_mse(model, validation, config.batch_size);
        history.validation_loss.push_back(val);
        if (val < history.best_validation_loss) {
            history.best_validation_loss = val;
            history.best_epoch = epoch;
            best = nn::snapshot_params(fingerprint, model.params);
        }
    }
    return {std::move(best), std::move(history)};
}

struct RepetitionResult {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    bool success = false;
    std::string error;
    nn::Checkpoint checkpoint;
    TrainHistory history;
};

/// Independent training runs; repetition r derives its seed as base + r for
/// initialization, shuffling and dropout, so any single run is reproducible
/// in isolation. Failed runs are recorded and do not stop the rest.
template <typename T>
std::vector<RepetitionResult> run_repetitions(const ArchitectureSpec& spec,
                                              const std::vector<Sample>& train,
                                              const std::vector<Sample>& validation,
                                              const TrainConfig& config, std::size_t jobs = 1) {
    config.validate();
    auto run_one = [&](std::size_t r) {
        RepetitionResult result;
        result.repetition = r;
        result.seed = config.seed + r;
        try {
            ArchitectureSpec rep_spec = spec;
            rep_spec.dropout = config.dropout;
            ModelGraph<T> model = build_model<T>(rep_spec, result.seed);
            TrainConfig rep_config = config;
            rep_config.seed = result.seed;
            auto [ckpt, history] = train_model(model, train, validation, rep_config);
            result.checkpoint = std::move(ckpt);
            result.history = std::move(history);
            result.success = true;
        } catch (const std::exception& e) {
            result.error = e.what();
        }
        return result;
    };

    std::vector<RepetitionResult> results(config.repetitions);
    if (jobs <= 1) {
        for (std::size_t r = 0; r < config.repetitions; ++r) results[r] = run_one(r);
        return results;
    }
    std::size_t next = 0;
    while (next < config.repetitions) {
        const std::size_t wave = std::min(jobs, config.repetitions - next);
        std::vector<std::future<RepetitionResult>> futures;
        for (std::size_t i = 0; i < wave; ++i)
            futures.push_back(std::async(std::launch::async, run_one, next + i));
        for (std::size_t i = 0; i < wave; ++i) results[next + i] = futures[i].get();
        next += wave;
    }
    return results;
}

inline nlohmann::json history_to_json(const TrainHistory& h) {
    return {{"train_loss", h.train_loss},
            {"validation_loss", h.validation_loss},
            {"best_epoch", h.best_epoch},
            {"best_validation_loss", h.best_validation_loss}};
}

inline TrainHistory history_from_json(const nlohmann::json& j) {
    TrainHistory h;
    h.train_loss = j.at("train_loss").get<std::vector<double>>();
    h.validation_loss = j.at("validation_loss").get<std::vector<double>>();
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    h.best_validation_loss = j.at("best_validation_loss").get<double>();
    return h;
}

}  // namespace fincast
