#include <catch2/catch_amalgamated.hpp>

#include "fincast/train.hpp"

using namespace fincast;

namespace {

ArchitectureSpec tiny_spec() {
    ArchitectureSpec spec;
    spec.kind = ArchitectureSpec::Kind::lstm;
    spec.window = 4;
    spec.quarterly_features = 3;
    spec.shares_dim = 6;
    spec.shares_tower = {8, 5, 4};
    spec.head = {4, 2, 1};
    spec.lstm_hidden1 = 5;
    spec.lstm_hidden2 = 3;
    spec.dropout = 0.0;
    return spec;
}

std::vector<Sample> random_samples(const ArchitectureSpec& spec, std::size_t n, std::uint64_t seed,
                                   double label_value = std::nan("")) {
    Rng rng(seed);
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.firm = "F" + std::to_string(i);
        s.anchor_date = Date{2015, 3, 31};
        s.label_date = Date{2015, 6, 30};
        s.window_rows = spec.window;
        s.window_cols = spec.quarterly_features;
        s.quarter_window.resize(spec.window * spec.quarterly_features);
        for (auto& v : s.quarter_window) v = rng.uniform(-1, 1);
        s.market_window.resize(spec.shares_dim);
        for (auto& v : s.market_window) v = rng.uniform(-1, 1);
        s.label = std::isnan(label_value) ? rng.uniform(-1, 1) : label_value;
        s.persistent_prediction = 0.0;
        samples.push_back(std::move(s));
    }
    return samples;
}

TrainConfig tiny_config(std::size_t epochs, std::size_t batch = 16) {
    TrainConfig c;
    c.batch_size = batch;
    c.epochs = epochs;
    c.dropout = 0.0;
    c.repetitions = 1;
    c.seed = 1;
    return c;
}

}  // namespace

TEST_CASE("select_best_epoch picks the earliest minimum") {
    CHECK(select_best_epoch({3.0, 1.0, 2.0}) == 1);
    CHECK(select_best_epoch({3.0, 1.0, 1.0}) == 1);
    CHECK(select_best_epoch({0.5}) == 0);
    CHECK_THROWS(select_best_epoch({}));
}

TEST_CASE("epoch_permutation is a permutation and depends on the epoch") {
    auto p0 = epoch_permutation(100, 7, 0);
    auto p1 = epoch_permutation(100, 7, 1);
    CHECK(p0 != p1);
    CHECK(epoch_permutation(100, 7, 0) == p0);
    auto sorted = p0;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 100; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("training on a constant-zero target drives the loss to zero") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 32, 3, 0.0);
    auto validation = random_samples(spec, 8, 4, 0.0);
    auto model = build_model<double>(spec, 1);
    auto config = tiny_config(200);
    config.learning_rate = 5e-3;
    auto [ckpt, history] = train_model(model, train, validation, config);
    CHECK(history.train_loss.back() < 1e-4);
    CHECK(history.train_loss.back() <= history.train_loss.front());
}

TEST_CASE("history tracks the best validation epoch and the checkpoint reproduces it") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 48, 5);
    auto validation = random_samples(spec, 12, 6);
    auto model = build_model<double>(spec, 2);
    auto config = tiny_config(12);
    auto [ckpt, history] = train_model(model, train, validation, config);

    REQUIRE(history.validation_loss.size() == 12);
    CHECK(history.best_epoch == select_best_epoch(history.validation_loss));
    CHECK(history.best_validation_loss == history.validation_loss[history.best_epoch]);

    // restoring the checkpoint reproduces the recorded best validation loss
    auto fresh = build_model<double>(spec, 77);
    nn::restore_params(ckpt, spec.fingerprint(), fresh.params);
    const double recomputed = evaluate_mse(fresh, validation, config.batch_size);
    CHECK_THAT(recomputed,
               Catch::Matchers::WithinRel(history.best_validation_loss, 1e-12));
}

TEST_CASE("f32 checkpoint reproduces its recorded validation loss within 1e-6 relative") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 48, 30);
    auto validation = random_samples(spec, 12, 31);
    auto model = build_model<float>(spec, 8);
    auto config = tiny_config(8);
    auto [ckpt, history] = train_model(model, train, validation, config);
    auto fresh = build_model<float>(spec, 123);
    nn::restore_params(ckpt, spec.fingerprint(), fresh.params);
    const double recomputed = evaluate_mse(fresh, validation, config.batch_size);
    CHECK_THAT(recomputed, Catch::Matchers::WithinRel(history.best_validation_loss, 1e-6));
}

TEST_CASE("identical config and seed give identical histories") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 40, 7);
    auto validation = random_samples(spec, 10, 8);
    auto config = tiny_config(6);
    config.dropout = 0.2;  // exercise the dropout stream as well
    auto run = [&] {
        auto model = build_model<float>(spec, 3);
        return train_model(model, train, validation, config).second;
    };
    auto h1 = run();
    auto h2 = run();
    CHECK(h1.train_loss == h2.train_loss);
    CHECK(h1.validation_loss == h2.validation_loss);
    CHECK(h1.best_epoch == h2.best_epoch);
}

TEST_CASE("dropout 0 and lr 0 freeze both loss curves") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 30, 9);
    auto validation = random_samples(spec, 10, 10);
    auto model = build_model<double>(spec, 4);
    auto config = tiny_config(5);
    config.learning_rate = 0.0;
    auto [ckpt, history] = train_model(model, train, validation, config);
    // batch reshuffling reorders an unchanged sum, so the train curve is
    // constant up to summation rounding; validation order is fixed
    for (double v : history.train_loss)
        CHECK_THAT(v, Catch::Matchers::WithinAbs(history.train_loss.front(), 1e-12));
    for (double v : history.validation_loss) CHECK(v == history.validation_loss.front());
    CHECK(history.best_epoch == 0);  // earliest epoch wins ties
}

TEST_CASE("non-finite loss aborts with epoch and batch context") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 20, 11);
    train[5].label = std::numeric_limits<double>::infinity();
    auto validation = random_samples(spec, 5, 12);
    auto model = build_model<double>(spec, 5);
    auto config = tiny_config(3, 8);
    CHECK_THROWS_WITH(train_model(model, train, validation, config),
                      Catch::Matchers::ContainsSubstring("non-finite training loss at epoch 0"));
}

TEST_CASE("training never reads the test set: checkpoints ignore it entirely") {
    // train_model's interface admits no test data at all; the pipeline-level
    // guarantee is that checkpoints are a function of (train, validation) only.
    auto spec = tiny_spec();
    auto train = random_samples(spec, 30, 13);
    auto validation = random_samples(spec, 8, 14);
    auto config = tiny_config(4);
    auto model_a = build_model<float>(spec, 6);
    auto ckpt_a = train_model(model_a, train, validation, config).first;
    auto model_b = build_model<float>(spec, 6);
    auto ckpt_b = train_model(model_b, train, validation, config).first;
    CHECK(nn::checkpoint_to_json(ckpt_a).dump() == nn::checkpoint_to_json(ckpt_b).dump());
}

TEST_CASE("empty train or validation sets are rejected") {
    auto spec = tiny_spec();
    auto model = build_model<double>(spec, 7);
    auto some = random_samples(spec, 4, 15);
    CHECK_THROWS(train_model(model, {}, some, tiny_config(1)));
    CHECK_THROWS(train_model(model, some, {}, tiny_config(1)));
}

TEST_CASE("run_repetitions: distinct derived seeds, reproducible set") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 30, 16);
    auto validation = random_samples(spec, 8, 17);
    auto config = tiny_config(3);
    config.repetitions = 5;
    config.seed = 100;
    auto results = run_repetitions<float>(spec, train, validation, config);
    REQUIRE(results.size() == 5);
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(results[r].repetition == r);
        CHECK(results[r].seed == 100 + r);
        CHECK(results[r].success);
    }
    // distinct seeds actually produce distinct parameters
    CHECK(nn::checkpoint_to_json(results[0].checkpoint).dump() !=
          nn::checkpoint_to_json(results[1].checkpoint).dump());
    // rerun reproduces every history
    auto again = run_repetitions<float>(spec, train, validation, config);
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(results[r].history.train_loss == again[r].history.train_loss);
        CHECK(results[r].history.validation_loss == again[r].history.validation_loss);
    }
}

TEST_CASE("run_repetitions: a single repetition equals train_model") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 24, 18);
    auto validation = random_samples(spec, 6, 19);
    auto config = tiny_config(3);
    config.seed = 55;
    auto results = run_repetitions<double>(spec, train, validation, config);
    REQUIRE(results.size() == 1);

    auto model = build_model<double>(spec, 55);
    TrainConfig direct = config;
    direct.seed = 55;
    auto [ckpt, history] = train_model(model, train, validation, direct);
    CHECK(results[0].history.train_loss == history.train_loss);
    CHECK(nn::checkpoint_to_json(results[0].checkpoint).dump() ==
          nn::checkpoint_to_json(ckpt).dump());
}

TEST_CASE("run_repetitions: failures are recorded while the rest continue") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 20, 20);
    train[3].label = std::numeric_limits<double>::quiet_NaN();
    auto validation = random_samples(spec, 6, 21);
    auto config = tiny_config(2);
    config.repetitions = 3;
    auto results = run_repetitions<float>(spec, train, validation, config);
    REQUIRE(results.size() == 3);
    for (const auto& r : results) {
        CHECK_FALSE(r.success);
        CHECK(r.error.find("non-finite") != std::string::npos);
    }
}

TEST_CASE("run_repetitions: parallel execution matches sequential bit for bit") {
    auto spec = tiny_spec();
    auto train = random_samples(spec, 30, 22);
    auto validation = random_samples(spec, 8, 23);
    auto config = tiny_config(3);
    config.repetitions = 3;
    auto seq = run_repetitions<float>(spec, train, validation, config, 1);
    auto par = run_repetitions<float>(spec, train, validation, config, 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(seq[r].history.validation_loss == par[r].history.validation_loss);
        CHECK(nn::checkpoint_to_json(seq[r].checkpoint).dump() ==
              nn::checkpoint_to_json(par[r].checkpoint).dump());
    }
}

TEST_CASE("history JSON round trip") {
    TrainHistory h;
    h.train_loss = {3.0, 2.0, 1.5};
    h.validation_loss = {3.1, 2.5, 2.6};
    h.best_epoch = 1;
    h.best_validation_loss = 2.5;
    auto restored = history_from_json(history_to_json(h));
    CHECK(restored.train_loss == h.train_loss);
    CHECK(restored.validation_loss == h.validation_loss);
    CHECK(restored.best_epoch == h.best_epoch);
    CHECK(restored.best_validation_loss == h.best_validation_loss);
}
