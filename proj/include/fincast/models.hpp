#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fincast/domain.hpp"
#include "fincast/nn/lstm.hpp"
#include "fincast/nn/tcn.hpp"

namespace fincast {

/// The two dual-input architectures: a quarters branch (two stacked LSTMs, or
/// a residual TCN stack reduced at the last step into a dense layer) merged by
/// concatenation with a dense tower over the flattened market input, feeding a
/// shared head whose final layer is linear with one unit.
struct ArchitectureSpec {
    enum class Kind { lstm, tcn };

    Kind kind = Kind::lstm;
    std::size_t window = 20;
    std::size_t quarterly_features = 19;
    std::size_t shares_dim = 220;
    std::vector<std::size_t> shares_tower = {660, 440, 220};
    std::vector<std::size_t> head = {19, 8, 1};
    std::size_t lstm_hidden1 = 76;
    std::size_t lstm_hidden2 = 38;
    nn::TcnSpec tcn;
    std::size_t post_tcn_dense = 38;
    double dropout = 0.3;

    std::size_t quarters_branch_dim() const {
        return kind == Kind::lstm ? lstm_hidden2 : post_tcn_dense;
    }
    std::size_t tower_out_dim() const {
        return shares_tower.empty() ? shares_dim : shares_tower.back();
    }
    std::size_t merge_dim() const { return quarters_branch_dim() + tower_out_dim(); }

    void validate() const {
        if (window == 0 || quarterly_features == 0 || shares_dim == 0)
            throw std::invalid_argument("architecture: input dims must be positive");
        if (head.empty() || head.back() != 1)
            throw std::invalid_argument("architecture: head must terminate in one unit");
        if (dropout < 0.0 || dropout >= 1.0)
            throw std::invalid_argument("architecture: dropout must be in [0,1)");
        if (kind == Kind::lstm) {
            if (lstm_hidden1 == 0 || lstm_hidden2 == 0)
                throw std::invalid_argument("architecture: lstm dims must be positive");
        } else {
            tcn.validate();
            if (post_tcn_dense == 0)
                throw std::invalid_argument("architecture: post-tcn dense dim must be positive");
            if (tcn.receptive_field() < window)
                throw std::invalid_argument(
                    "architecture: tcn receptive field " + std::to_string(tcn.receptive_field()) +
                    " does not cover window " + std::to_string(window));
        }
    }

    /// Kind plus every dimension and dilation; embedded in checkpoints so a
    /// snapshot can only be restored into the architecture that produced it.
    std::string fingerprint() const {
        std::ostringstream s;
        s << (kind == Kind::lstm ? "lstm" : "tcn") << "|q" << window << "x" << quarterly_features;
        if (kind == Kind::lstm) {
            s << "|h" << lstm_hidden1 << "-" << lstm_hidden2;
        } else {
            s << "|f" << tcn.filters << "k" << tcn.kernel << "d";
            for (std::size_t i = 0; i < tcn.dilations.size(); ++i)
                s << (i ? "," : "") << tcn.dilations[i];
            s << "|post" << post_tcn_dense;
        }
        s << "|shares" << shares_dim;
        for (auto dim : shares_tower) s << "-" << dim;
        s << "|head";
        for (std::size_t i = 0; i < head.size(); ++i) s << (i ? "-" : "") << head[i];
        return s.str();
    }
};

inline std::string to_string(ArchitectureSpec::Kind k) {
    return k == ArchitectureSpec::Kind::lstm ? "lstm" : "tcn";
}

inline ArchitectureSpec::Kind parse_kind(const std::string& s) {
    if (s == "lstm") return ArchitectureSpec::Kind::lstm;
    if (s == "tcn") return ArchitectureSpec::Kind::tcn;
    throw std::invalid_argument("unknown architecture kind: " + s);
}

/// Parameter names and shapes implied by a spec, in creation order. This is
/// derived from the dimension arithmetic alone, so tests can audit a built
/// model against it.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> param_audit(
    const ArchitectureSpec& spec) {
    spec.validate();
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    if (spec.kind == ArchitectureSpec::Kind::lstm) {
        out.push_back({"quarters.lstm1.W",
                       {spec.quarterly_features + spec.lstm_hidden1, 4 * spec.lstm_hidden1}});
        out.push_back({"quarters.lstm1.b", {4 * spec.lstm_hidden1}});
        out.push_back({"quarters.lstm2.W", {spec.lstm_hidden1 + spec.lstm_hidden2, 4 * spec.lstm_hidden2}});
        out.push_back({"quarters.lstm2.b", {4 * spec.lstm_hidden2}});
    } else {
        std::size_t in_ch = spec.quarterly_features;
        for (std::size_t level = 0; level < spec.tcn.dilations.size(); ++level) {
            const std::string base = "quarters.tcn.block" + std::to_string(level);
            out.push_back({base + ".conv1.K", {spec.tcn.kernel, in_ch, spec.tcn.filters}});
            out.push_back({base + ".conv1.b", {spec.tcn.filters}});
            out.push_back({base + ".conv2.K", {spec.tcn.kernel, spec.tcn.filters, spec.tcn.filters}});
            out.push_back({base + ".conv2.b", {spec.tcn.filters}});
            if (in_ch != spec.tcn.filters) {
                out.push_back({base + ".skip.K", {1, in_ch, spec.tcn.filters}});
                out.push_back({base + ".skip.b", {spec.tcn.filters}});
            }
            in_ch = spec.tcn.filters;
        }
        out.push_back({"quarters.dense.W", {spec.tcn.filters, spec.post_tcn_dense}});
        out.push_back({"quarters.dense.b", {spec.post_tcn_dense}});
    }
    std::size_t in_dim = spec.shares_dim;
    for (std::size_t i = 0; i < spec.shares_tower.size(); ++i) {
        out.push_back({"shares.fc" + std::to_string(i) + ".W", {in_dim, spec.shares_tower[i]}});
        out.push_back({"shares.fc" + std::to_string(i) + ".b", {spec.shares_tower[i]}});
        in_dim = spec.shares_tower[i];
    }
    in_dim = spec.merge_dim();
    for (std::size_t i = 0; i < spec.head.size(); ++i) {
        out.push_back({"head.fc" + std::to_string(i) + ".W", {in_dim, spec.head[i]}});
        out.push_back({"head.fc" + std::to_string(i) + ".b", {spec.head[i]}});
        in_dim = spec.head[i];
    }
    return out;
}

template <typename T>
struct ModelGraph {
    ArchitectureSpec spec;
    std::vector<nn::Parameter<T>> params;
    nn::Mode mode = nn::Mode::eval;

    nn::Parameter<T>& param(const std::string& name) {
        for (auto& p : params)
            if (p.name == name) return p;
        throw std::logic_error("no parameter named " + name);
    }
    const nn::Tensor<T>& p(const std::string& name) {
        return param(name).tensor;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.tensor.size();
        return n;
    }
};

/// Construct a model with seeded initialization: Glorot-uniform weights,
/// zero biases except the LSTM forget-gate block (1). Creation order is fixed,
/// so equal seeds give bit-identical parameters.
template <typename T>
ModelGraph<T> build_model(const ArchitectureSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ModelGraph<T> model;
    model.spec = spec;

    if (spec.kind == ArchitectureSpec::Kind::lstm) {
        nn::LstmLayerSpec l1{spec.quarterly_features, spec.lstm_hidden1, true, spec.dropout};
        nn::LstmLayerSpec l2{spec.lstm_hidden1, spec.lstm_hidden2, false, spec.dropout};
        auto p1 = nn::init_lstm_params<T>(l1, rng);
        model.params.emplace_back("quarters.lstm1.W", p1.weights);
        model.params.emplace_back("quarters.lstm1.b", p1.bias);
        auto p2 = nn::init_lstm_params<T>(l2, rng);
        model.params.emplace_back("quarters.lstm2.W", p2.weights);
        model.params.emplace_back("quarters.lstm2.b", p2.bias);
    } else {
        std::size_t in_ch = spec.quarterly_features;
        for (std::size_t level = 0; level < spec.tcn.dilations.size(); ++level) {
            const std::string base = "quarters.tcn.block" + std::to_string(level);
            auto block = nn::init_tcn_block<T>(in_ch, spec.tcn, rng);
            model.params.emplace_back(base + ".conv1.K", block.conv1_kernel);
            model.params.emplace_back(base + ".conv1.b", block.conv1_bias);
            model.params.emplace_back(base + ".conv2.K", block.conv2_kernel);
            model.params.emplace_back(base + ".conv2.b", block.conv2_bias);
            if (block.skip_kernel.defined()) {
                model.params.emplace_back(base + ".skip.K", block.skip_kernel);
                model.params.emplace_back(base + ".skip.b", block.skip_bias);
            }
            in_ch = spec.tcn.filters;
        }
        model.params.emplace_back(
            "quarters.dense.W",
            nn::glorot_uniform<T>({spec.tcn.filters, spec.post_tcn_dense}, spec.tcn.filters,
                                  spec.post_tcn_dense, rng));
        model.params.emplace_back("quarters.dense.b", nn::Tensor<T>::zeros({spec.post_tcn_dense}));
    }

    std::size_t in_dim = spec.shares_dim;
    for (std::size_t i = 0; i < spec.shares_tower.size(); ++i) {
        const std::size_t out_dim = spec.shares_tower[i];
        model.params.emplace_back("shares.fc" + std::to_string(i) + ".W",
                                  nn::glorot_uniform<T>({in_dim, out_dim}, in_dim, out_dim, rng));
        model.params.emplace_back("shares.fc" + std::to_string(i) + ".b",
                                  nn::Tensor<T>::zeros({out_dim}));
        in_dim = out_dim;
    }
    in_dim = spec.merge_dim();
    for (std::size_t i = 0; i < spec.head.size(); ++i) {
        const std::size_t out_dim = spec.head[i];
        model.params.emplace_back("head.fc" + std::to_string(i) + ".W",
                                  nn::glorot_uniform<T>({in_dim, out_dim}, in_dim, out_dim, rng));
        model.params.emplace_back("head.fc" + std::to_string(i) + ".b",
                                  nn::Tensor<T>::zeros({out_dim}));
        in_dim = out_dim;
    }
    return model;
}

/// Full forward pass over a batch: quarters [B, window, F], shares [B, D].
/// Returns predictions [B]. In train mode, dropout follows every intermediate
/// layer and the LSTM recurrent state (variational mask); eval mode is pure.
template <typename T>
nn::Tensor<T> model_forward(ModelGraph<T>& model, const nn::Tensor<T>& quarters,
                            const nn::Tensor<T>& shares, Rng* rng = nullptr) {
    using namespace nn;
    const auto& spec = model.spec;
    const bool train = model.mode == Mode::train;
    if (train && spec.dropout > 0.0 && !rng)
        throw std::invalid_argument("model_forward: train mode needs an rng");
    detail::require(quarters.rank() == 3 && quarters.dim(1) == spec.window &&
                        quarters.dim(2) == spec.quarterly_features,
                    "model_forward: quarters shape " + shape_str(quarters.shape()) +
                        " does not match spec");
    detail::require(shares.rank() == 2 && shares.dim(1) == spec.shares_dim,
                    "model_forward: shares shape mismatch");

    auto drop = [&](Tensor<T> x) {
        return train && spec.dropout > 0.0 ? dropout(x, spec.dropout, Mode::train, *rng) : x;
    };

    Tensor<T> qbranch;
    if (spec.kind == ArchitectureSpec::Kind::lstm) {
        LstmLayerSpec l1{spec.quarterly_features, spec.lstm_hidden1, true, spec.dropout};
        LstmLayerSpec l2{spec.lstm_hidden1, spec.lstm_hidden2, false, spec.dropout};
        LstmParams<T> p1{model.p("quarters.lstm1.W"), model.p("quarters.lstm1.b")};
        LstmParams<T> p2{model.p("quarters.lstm2.W"), model.p("quarters.lstm2.b")};
        Tensor<T> seq = drop(lstm_forward(quarters, l1, p1, model.mode, rng));
        qbranch = drop(lstm_forward(seq, l2, p2, model.mode, rng));
    } else {
        TcnSpec tspec = spec.tcn;
        tspec.dropout = spec.dropout;
        std::vector<TcnBlockParams<T>> blocks;
        std::size_t in_ch = spec.quarterly_features;
        for (std::size_t level = 0; level < tspec.dilations.size(); ++level) {
            const std::string base = "quarters.tcn.block" + std::to_string(level);
            TcnBlockParams<T> b;
            b.conv1_kernel = model.p(base + ".conv1.K");
            b.conv1_bias = model.p(base + ".conv1.b");
            b.conv2_kernel = model.p(base + ".conv2.K");
            b.conv2_bias = model.p(base + ".conv2.b");
            if (in_ch != tspec.filters) {
                b.skip_kernel = model.p(base + ".skip.K");
                b.skip_bias = model.p(base + ".skip.b");
            }
            blocks.push_back(std::move(b));
            in_ch = tspec.filters;
        }
        Tensor<T> seq = tcn_forward(quarters, tspec, blocks, model.mode, rng);
        Tensor<T> last = slice_step(seq, spec.window - 1);
        qbranch = drop(dense_forward(last, model.p("quarters.dense.W"),
                                     model.p("quarters.dense.b"), Activation::tanh));
    }

    Tensor<T> s = shares;
    for (std::size_t i = 0; i < spec.shares_tower.size(); ++i)
        s = drop(dense_forward(s, model.p("shares.fc" + std::to_string(i) + ".W"),
                               model.p("shares.fc" + std::to_string(i) + ".b"), Activation::tanh));

    Tensor<T> h = concat_cols(qbranch, s);
    for (std::size_t i = 0; i < spec.head.size(); ++i) {
        const bool last_layer = i + 1 == spec.head.size();
        h = dense_forward(h, model.p("head.fc" + std::to_string(i) + ".W"),
                          model.p("head.fc" + std::to_string(i) + ".b"),
                          last_layer ? Activation::linear : Activation::tanh);
        if (!last_layer) h = drop(h);
    }
    return reshape(h, {h.dim(0)});
}

/// Copy a span of samples into input tensors for the model.
template <typename T>
std::pair<nn::Tensor<T>, nn::Tensor<T>> assemble_batch(const ArchitectureSpec& spec,
                                                       const std::vector<Sample>& samples,
                                                       std::size_t begin, std::size_t end) {
    const std::size_t b = end - begin;
    const std::size_t qn = spec.window * spec.quarterly_features;
    std::vector<T> q(b * qn), s(b * spec.shares_dim);
    for (std::size_t i = 0; i < b; ++i) {
        const Sample& sample = samples[begin + i];
        if (sample.quarter_window.size() != qn || sample.market_window.size() != spec.shares_dim)
            throw std::invalid_argument(
                "sample dims do not match architecture: quarter window " +
                std::to_string(sample.quarter_window.size()) + " vs " + std::to_string(qn) +
                ", market " + std::to_string(sample.market_window.size()) + " vs " +
                std::to_string(spec.shares_dim));
        for (std::size_t j = 0; j < qn; ++j) q[i * qn + j] = static_cast<T>(sample.quarter_window[j]);
        for (std::size_t j = 0; j < spec.shares_dim; ++j)
            s[i * spec.shares_dim + j] = static_cast<T>(sample.market_window[j]);
    }
    return {nn::Tensor<T>::from_values({b, spec.window, spec.quarterly_features}, std::move(q)),
            nn::Tensor<T>::from_values({b, spec.shares_dim}, std::move(s))};
}

/// Eval-mode predictions, one per sample in input order. Processes fixed-size
/// chunks; results are independent of the chunking.
template <typename T>
std::vector<double> predict(ModelGraph<T>& model, const std::vector<Sample>& samples,
                            std::size_t chunk = 1024) {
    if (model.mode != nn::Mode::eval)
        throw std::logic_error("predict requires eval mode");
    std::vector<double> out;
    out.reserve(samples.size());
    for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
        const std::size_t end = std::min(samples.size(), begin + chunk);
        auto [q, s] = assemble_batch<T>(model.spec, samples, begin, end);
        nn::Tensor<T> pred = model_forward(model, q, s);
        for (T v : pred.values()) out.push_back(static_cast<double>(v));
    }
    return out;
}

}  // namespace fincast
