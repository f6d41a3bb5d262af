#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fincast/nn/tensor.hpp"
#include "fincast/rng.hpp"

namespace fincast::nn {

/// Named trainable tensor with its Adam moment state.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> tensor;
    std::vector<T> adam_m;
    std::vector<T> adam_v;
    std::uint64_t step_count = 0;

    Parameter() = default;
    Parameter(std::string param_name, Tensor<T> t)
        : name(std::move(param_name)), tensor(std::move(t)) {
        tensor.set_requires_grad(true);
        adam_m.assign(tensor.size(), T(0));
        adam_v.assign(tensor.size(), T(0));
    }
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One Adam update with bias correction; gradients are cleared afterwards.
template <typename T>
void adam_step(std::vector<Parameter<T>>& params, const AdamConfig& cfg) {
    for (auto& p : params) {
        auto* node = p.tensor.node();
        if (node->grad.size() != node->values.size())
            throw std::runtime_error("adam_step: missing gradient for parameter " + p.name);
        p.step_count += 1;
        const T lr = static_cast<T>(cfg.learning_rate);
        const T b1 = static_cast<T>(cfg.beta1);
        const T b2 = static_cast<T>(cfg.beta2);
        const T eps = static_cast<T>(cfg.epsilon);
        const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(p.step_count)));
        const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(p.step_count)));
        for (std::size_t i = 0; i < node->values.size(); ++i) {
            const T g = node->grad[i];
            p.adam_m[i] = b1 * p.adam_m[i] + (T(1) - b1) * g;
            p.adam_v[i] = b2 * p.adam_v[i] + (T(1) - b2) * g * g;
            const T m_hat = p.adam_m[i] / corr1;
            const T v_hat = p.adam_v[i] / corr2;
            node->values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
        node->grad.assign(node->values.size(), T(0));
    }
}

/// Uniform Glorot initialization: U(-sqrt(6/(fan_in+fan_out)), +).
template <typename T>
Tensor<T> glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                         Rng& rng) {
    auto t = Tensor<T>::zeros(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-limit, limit));
    return t;
}

}  // namespace fincast::nn
