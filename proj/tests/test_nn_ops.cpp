#include <catch2/catch_amalgamated.hpp>

#include "fincast/nn/adam.hpp"
#include "fincast/nn/gradcheck.hpp"
#include "fincast/nn/ops.hpp"

using namespace fincast;
using namespace fincast::nn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, bool requires_grad = false) {
    auto t = Tensor<double>::zeros(std::move(shape), requires_grad);
    for (auto& v : t.values()) v = rng.uniform(-1, 1);
    return t;
}

}  // namespace

TEST_CASE("dense forward: zero weights under tanh give zero") {
    auto x = Tensor<double>::full({2, 3}, 0.7);
    auto w = Tensor<double>::zeros({3, 4});
    auto b = Tensor<double>::zeros({4});
    auto y = dense_forward(x, w, b, Activation::tanh);
    for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("dense forward: identity weights under linear activation pass input through") {
    Rng rng(5);
    auto x = random_tensor({4, 3}, rng);
    auto w = Tensor<double>::zeros({3, 3});
    for (std::size_t i = 0; i < 3; ++i) w.values()[i * 3 + i] = 1.0;
    auto b = Tensor<double>::zeros({3});
    auto y = dense_forward(x, w, b, Activation::linear);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK_THAT(y.values()[i], WithinAbs(x.values()[i], 1e-15));
}

TEST_CASE("dense gradients match central finite differences") {
    Rng rng(17);
    auto x = random_tensor({3, 4}, rng);
    std::vector<Parameter<double>> params;
    params.emplace_back("W", random_tensor({4, 2}, rng));
    params.emplace_back("b", random_tensor({2}, rng));
    auto target = random_tensor({3}, rng);
    auto loss_fn = [&] {
        auto h = dense_forward(x, params[0].tensor, params[1].tensor, Activation::tanh);
        auto folded = add(slice_cols(h, 0, 1), slice_cols(h, 1, 2));
        return mse_loss(reshape(folded, {3}), target);
    };
    CHECK(grad_check<double>(loss_fn, params, 1e-5) < 1e-6);
}

TEST_CASE("elementwise and shaping ops backprop exactly") {
    Rng rng(29);
    std::vector<Parameter<double>> params;
    params.emplace_back("a", random_tensor({3, 4}, rng));
    params.emplace_back("b", random_tensor({3, 4}, rng));
    auto target = random_tensor({6}, rng);
    auto loss_fn = [&] {
        auto prod = mul(sigmoid_act(params[0].tensor), tanh_act(params[1].tensor));
        auto summed = add(prod, params[0].tensor);
        auto joined = concat_cols(slice_cols(summed, 0, 2), slice_cols(summed, 2, 4));
        return mse_loss(reshape(slice_cols(joined, 1, 3), {6}), target);
    };
    CHECK(grad_check<double>(loss_fn, params, 1e-6) < 1e-7);
}

TEST_CASE("sequence ops backprop exactly") {
    Rng rng(31);
    std::vector<Parameter<double>> params;
    params.emplace_back("x", random_tensor({2, 5, 3}, rng));
    auto target = random_tensor({2}, rng);
    auto loss_fn = [&] {
        std::vector<Tensor<double>> steps;
        for (std::size_t t = 0; t < 5; ++t) steps.push_back(slice_step(params[0].tensor, t));
        auto restacked = stack_steps(steps);
        auto last = slice_step(restacked, 4);
        return mse_loss(reshape(slice_cols(last, 0, 1), {2}), target);
    };
    CHECK(grad_check<double>(loss_fn, params, 1e-6) < 1e-8);
}

TEST_CASE("mse examples") {
    auto zeros = Tensor<double>::zeros({2});
    auto target = Tensor<double>::from_values({2}, {1.0, 3.0});
    CHECK_THAT(mse_loss(zeros, target).item(), WithinAbs(5.0, 1e-15));  // (1+9)/2
    CHECK(mse_loss(target, target).item() == 0.0);
    CHECK_THROWS(mse_loss(Tensor<double>::zeros({3}), target));
}

TEST_CASE("mse gradient matches finite differences") {
    Rng rng(37);
    std::vector<Parameter<double>> params;
    params.emplace_back("pred", random_tensor({8}, rng));
    auto target = random_tensor({8}, rng);
    auto loss_fn = [&] { return mse_loss(params[0].tensor, target); };
    CHECK(grad_check<double>(loss_fn, params, 1e-6) < 1e-8);
}

TEST_CASE("dropout eval mode and zero rate are the identity") {
    Rng rng(41);
    auto x = random_tensor({10, 10}, rng);
    auto eval_out = dropout(x, 0.7, Mode::eval, rng);
    CHECK(eval_out.node() == x.node());
    auto train_zero = dropout(x, 0.0, Mode::train, rng);
    CHECK(train_zero.node() == x.node());
    CHECK_THROWS(dropout(x, 1.0, Mode::train, rng));
}

TEST_CASE("inverted dropout preserves the mean at rate 0.3") {
    Rng rng(43);
    auto x = Tensor<double>::full({100000}, 1.0);
    auto y = dropout(x, 0.3, Mode::train, rng);
    double mean = 0.0;
    for (double v : y.values()) mean += v;
    mean /= static_cast<double>(y.size());
    CHECK_THAT(mean, WithinAbs(1.0, 0.02));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged but counts the step") {
    Rng rng(47);
    std::vector<Parameter<double>> params;
    params.emplace_back("w", random_tensor({4}, rng));
    const auto before = params[0].tensor.values();
    params[0].tensor.zero_grad();
    adam_step(params, AdamConfig{});
    CHECK(params[0].tensor.values() == before);
    CHECK(params[0].step_count == 1);
}

TEST_CASE("adam: first step moves by about lr * sign(grad)") {
    std::vector<Parameter<double>> params;
    params.emplace_back("w", Tensor<double>::from_values({3}, {1.0, 2.0, 3.0}));
    params[0].tensor.grad() = {0.5, -2.0, 10.0};
    AdamConfig cfg;
    cfg.learning_rate = 1e-3;
    adam_step(params, cfg);
    CHECK_THAT(params[0].tensor.values()[0], WithinAbs(1.0 - 1e-3, 1e-7));
    CHECK_THAT(params[0].tensor.values()[1], WithinAbs(2.0 + 1e-3, 1e-7));
    CHECK_THAT(params[0].tensor.values()[2], WithinAbs(3.0 - 1e-3, 1e-7));
}

TEST_CASE("adam: gradients are cleared after the step") {
    std::vector<Parameter<double>> params;
    params.emplace_back("w", Tensor<double>::from_values({2}, {1.0, 1.0}));
    params[0].tensor.grad() = {1.0, 1.0};
    adam_step(params, AdamConfig{});
    for (double g : params[0].tensor.grad()) CHECK(g == 0.0);
}

TEST_CASE("adam: missing gradient is an error") {
    std::vector<Parameter<double>> params;
    params.emplace_back("w", Tensor<double>::from_values({2}, {1.0, 1.0}));
    CHECK_THROWS_WITH(adam_step(params, AdamConfig{}),
                      Catch::Matchers::ContainsSubstring("missing gradient"));
}

TEST_CASE("adam: identical gradient streams give bit-identical parameters") {
    auto run = [] {
        std::vector<Parameter<double>> params;
        params.emplace_back("w", Tensor<double>::from_values({3}, {0.1, -0.2, 0.3}));
        AdamConfig cfg;
        for (int step = 0; step < 25; ++step) {
            auto& g = params[0].tensor.grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] = 0.01 * static_cast<double>(step + 1) * (i % 2 ? -1.0 : 1.0);
            adam_step(params, cfg);
        }
        return params[0].tensor.values();
    };
    CHECK(run() == run());
}

TEST_CASE("adam: lr 0 never changes parameters") {
    std::vector<Parameter<double>> params;
    params.emplace_back("w", Tensor<double>::from_values({2}, {5.0, -5.0}));
    AdamConfig cfg;
    cfg.learning_rate = 0.0;
    for (int i = 0; i < 3; ++i) {
        params[0].tensor.grad() = {1.0, 2.0};
        adam_step(params, cfg);
    }
    CHECK(params[0].tensor.values() == std::vector<double>{5.0, -5.0});
}

TEST_CASE("eval-mode forward is pure: same inputs give bit-identical outputs") {
    Rng rng(53);
    auto x = random_tensor({5, 6}, rng);
    auto w = random_tensor({6, 4}, rng);
    auto b = random_tensor({4}, rng);
    auto y1 = dense_forward(x, w, b, Activation::tanh);
    auto y2 = dense_forward(x, w, b, Activation::tanh);
    CHECK(y1.values() == y2.values());
}
