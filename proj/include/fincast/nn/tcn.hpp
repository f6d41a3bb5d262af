#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

#include "fincast/nn/adam.hpp"
#include "fincast/nn/ops.hpp"

namespace fincast::nn {

struct TcnSpec {
    std::size_t filters = 32;
    std::size_t kernel = 3;
    std::vector<std::size_t> dilations = {1, 2, 4, 8};
    double dropout = 0.0;

    /// 1 + (k-1) * sum(d_i)
    std::size_t receptive_field() const {
        std::size_t sum = std::accumulate(dilations.begin(), dilations.end(), std::size_t{0});
        return 1 + (kernel - 1) * sum;
    }

    void validate() const {
        if (filters == 0 || kernel == 0) throw std::invalid_argument("tcn: filters and kernel must be positive");
        if (dilations.empty()) throw std::invalid_argument("tcn: need at least one dilation");
        for (std::size_t i = 0; i < dilations.size(); ++i)
            if (dilations[i] != (std::size_t{1} << i))
                throw std::invalid_argument("tcn: dilations must grow as powers of two (1,2,4,...)");
        if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("tcn: dropout must be in [0,1)");
    }
};

/// One residual level: two dilated causal convolutions plus an optional
/// 1x1-convolution skip projection (present only when channel counts differ).
template <typename T>
struct TcnBlockParams {
    Tensor<T> conv1_kernel, conv1_bias;
    Tensor<T> conv2_kernel, conv2_bias;
    Tensor<T> skip_kernel, skip_bias;  // undefined when input channels == filters
};

template <typename T>
TcnBlockParams<T> init_tcn_block(std::size_t in_channels, const TcnSpec& spec, Rng& rng) {
    const std::size_t k = spec.kernel, f = spec.filters;
    TcnBlockParams<T> p;
    p.conv1_kernel = glorot_uniform<T>({k, in_channels, f}, k * in_channels, k * f, rng);
    p.conv1_bias = Tensor<T>::zeros({f});
    p.conv2_kernel = glorot_uniform<T>({k, f, f}, k * f, k * f, rng);
    p.conv2_bias = Tensor<T>::zeros({f});
    if (in_channels != f) {
        p.skip_kernel = glorot_uniform<T>({1, in_channels, f}, in_channels, f, rng);
        p.skip_bias = Tensor<T>::zeros({f});
    }
    return p;
}

template <typename T>
Tensor<T> tcn_block_forward(const Tensor<T>& x, const TcnBlockParams<T>& params,
                            std::size_t dilation, double dropout_rate, Mode mode, Rng* rng) {
    Tensor<T> y = tanh_act(causal_conv1d(x, params.conv1_kernel, params.conv1_bias, dilation));
    if (mode == Mode::train && dropout_rate > 0.0) y = dropout(y, dropout_rate, mode, *rng);
    y = tanh_act(causal_conv1d(y, params.conv2_kernel, params.conv2_bias, dilation));
    if (mode == Mode::train && dropout_rate > 0.0) y = dropout(y, dropout_rate, mode, *rng);
    Tensor<T> skip =
        params.skip_kernel.defined() ? causal_conv1d(x, params.skip_kernel, params.skip_bias, 1) : x;
    return tanh_act(add(y, skip));
}

/// Residual TCN stack over X[b,T,c]: one block per dilation, channel width
/// `filters` throughout. Output is the full sequence [b,T,filters].
template <typename T>
Tensor<T> tcn_forward(const Tensor<T>& x, const TcnSpec& spec,
                      const std::vector<TcnBlockParams<T>>& blocks, Mode mode = Mode::eval,
                      Rng* rng = nullptr) {
    spec.validate();
    detail::require(x.rank() == 3, "tcn_forward: input must be [batch, steps, channels]");
    detail::require(blocks.size() == spec.dilations.size(), "tcn_forward: one block per dilation");
    if (mode == Mode::train && spec.dropout > 0.0 && !rng)
        throw std::invalid_argument("tcn_forward: train-mode dropout needs an rng");
    Tensor<T> h = x;
    for (std::size_t level = 0; level < blocks.size(); ++level)
        h = tcn_block_forward(h, blocks[level], spec.dilations[level], spec.dropout, mode, rng);
    return h;
}

}  // namespace fincast::nn
