#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fincast/nn/adam.hpp"
#include "fincast/rng.hpp"

namespace fincast::nn {

/// Central finite differences against the accumulated analytic gradient.
///
/// `loss_fn` must rebuild the same scalar graph from the parameters' current
/// values on every call (dropout off or masks frozen). Checks every element by
/// default; `max_per_param` > 0 spot-checks a seeded random subset per
/// parameter, which keeps large graphs tractable. Returns the worst relative
/// error, with the denominator floored so near-zero gradients do not explode
/// the ratio.
template <typename T>
double grad_check(const std::function<Tensor<T>()>& loss_fn, std::vector<Parameter<T>>& params,
                  double step = 1e-5, std::size_t max_per_param = 0, std::uint64_t seed = 0) {
    for (auto& p : params) p.tensor.zero_grad();
    Tensor<T> loss = loss_fn();
    loss.backward();
    std::vector<std::vector<T>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.tensor.grad());

    constexpr double kScaleFloor = 1e-4;
    double worst = 0.0;
    Rng rng(mix_seed(seed, 0x6fd1c));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& values = params[pi].tensor.values();
        std::vector<std::size_t> idx(values.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (max_per_param > 0 && values.size() > max_per_param) {
            rng.shuffle(idx);
            idx.resize(max_per_param);
            std::sort(idx.begin(), idx.end());
        }
        for (std::size_t i : idx) {
            const T saved = values[i];
            values[i] = saved + static_cast<T>(step);
            const double up = static_cast<double>(loss_fn().item());
            values[i] = saved - static_cast<T>(step);
            const double down = static_cast<double>(loss_fn().item());
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double exact = static_cast<double>(analytic[pi][i]);
            const double denom = std::max({std::abs(exact), std::abs(numeric), kScaleFloor});
            worst = std::max(worst, std::abs(exact - numeric) / denom);
        }
    }
    for (auto& p : params) p.tensor.zero_grad();
    return worst;
}

}  // namespace fincast::nn
