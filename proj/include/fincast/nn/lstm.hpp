#pragma once

#include <stdexcept>

#include "fincast/nn/adam.hpp"
#include "fincast/nn/ops.hpp"

namespace fincast::nn {

struct LstmLayerSpec {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    bool return_sequence = false;
    double recurrent_dropout = 0.0;

    void validate() const {
        if (input_dim == 0 || hidden_dim == 0)
            throw std::invalid_argument("lstm: dims must be positive");
        if (recurrent_dropout < 0.0 || recurrent_dropout >= 1.0)
            throw std::invalid_argument("lstm: recurrent dropout must be in [0,1)");
    }
};

/// Gate weights fused into one matrix over [x_t ; h_{t-1}].
/// Column blocks in order: forget | input | output | candidate.
template <typename T>
struct LstmParams {
    Tensor<T> weights;  // [input_dim + hidden_dim, 4*hidden_dim]
    Tensor<T> bias;     // [4*hidden_dim]
};

/// Glorot weights; forget-gate bias block set to 1, the rest 0.
template <typename T>
LstmParams<T> init_lstm_params(const LstmLayerSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t in = spec.input_dim + spec.hidden_dim;
    const std::size_t out = 4 * spec.hidden_dim;
    LstmParams<T> p;
    p.weights = glorot_uniform<T>({in, out}, in, out, rng);
    p.bias = Tensor<T>::zeros({out});
    for (std::size_t j = 0; j < spec.hidden_dim; ++j) p.bias.values()[j] = T(1);
    return p;
}

/// Standard LSTM recurrence over X[b,T,input_dim]:
///   f_t, i_t, o_t = sigmoid(W.[x_t; h']), g_t = tanh(W.[x_t; h'])
///   c_t = f_t * c_{t-1} + i_t * g_t,  h_t = o_t * tanh(c_t)   (elementwise)
/// with h_0 = c_0 = 0 and h' = h_{t-1} under a per-sequence frozen dropout
/// mask in train mode. Returns [b,T,hidden] when return_sequence, else the
/// final [b,hidden].
template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const LstmLayerSpec& spec, const LstmParams<T>& params,
                       Mode mode = Mode::eval, Rng* rng = nullptr) {
    spec.validate();
    detail::require(x.rank() == 3 && x.dim(2) == spec.input_dim,
                    "lstm_forward: input shape " + shape_str(x.shape()) + " does not match spec");
    const std::size_t b = x.dim(0), steps = x.dim(1), hid = spec.hidden_dim;
    detail::require(steps >= 1, "lstm_forward: empty sequence");
    const std::size_t expected_rows = spec.input_dim + hid;
    detail::require(params.weights.rank() == 2 && params.weights.dim(0) == expected_rows &&
                        params.weights.dim(1) == 4 * hid,
                    "lstm_forward: weight shape mismatch");

    std::shared_ptr<const std::vector<T>> rec_mask;
    if (mode == Mode::train && spec.recurrent_dropout > 0.0) {
        if (!rng) throw std::invalid_argument("lstm_forward: train-mode dropout needs an rng");
        rec_mask = make_dropout_mask<T>(b * hid, spec.recurrent_dropout, *rng);
    }

    Tensor<T> h = Tensor<T>::zeros({b, hid});
    Tensor<T> c = Tensor<T>::zeros({b, hid});
    std::vector<Tensor<T>> outputs;
    outputs.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Tensor<T> xt = slice_step(x, t);
        Tensor<T> h_in = rec_mask ? mul_mask(h, rec_mask) : h;
        Tensor<T> pre = add_bias(matmul(concat_cols(xt, h_in), params.weights), params.bias);
        Tensor<T> f = sigmoid_act(slice_cols(pre, 0, hid));
        Tensor<T> i = sigmoid_act(slice_cols(pre, hid, 2 * hid));
        Tensor<T> o = sigmoid_act(slice_cols(pre, 2 * hid, 3 * hid));
        Tensor<T> g = tanh_act(slice_cols(pre, 3 * hid, 4 * hid));
        c = add(mul(f, c), mul(i, g));
        h = mul(o, tanh_act(c));
        if (spec.return_sequence) outputs.push_back(h);
    }
    return spec.return_sequence ? stack_steps(outputs) : h;
}

}  // namespace fincast::nn
