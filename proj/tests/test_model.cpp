#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oneshot/model.hpp"
#include "oneshot/rng.hpp"

using namespace oneshot;

TEST_CASE("spec validation rejects malformed architectures") {
    ModelSpec s;
    s.arch = "transformer";
    s.input_shape = {4};
    s.hidden = {8};
    s.num_classes = 3;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.arch = "mlp";
    CHECK_NOTHROW(validate(s));
    s.num_classes = 1;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.num_classes = 3;
    s.hidden = {};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.hidden = {8};
    s.input_shape = {1, 4, 4};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
    s.arch = "small_cnn";
    CHECK_NOTHROW(validate(s));
    s.hidden = {8, 8, 8};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

TEST_CASE("mlp parameter count matches its construction") {
    ModelSpec s;
    s.arch = "mlp";
    s.input_shape = {4};
    s.hidden = {8};
    s.num_classes = 3;
    Model m = build_model(s, 1);
    CHECK(m.params.total_dim() == 4 * 8 + 8 + 8 + 8 + 8 * 3 + 3);
    CHECK(m.bn_states.size() == 1);
    CHECK(m.bn_states[0].channels() == 8);
}

TEST_CASE("cnn blocks carry one batch norm each") {
    ModelSpec s;
    s.input_shape = {1, 8, 8};
    s.hidden = {4, 8};
    s.num_classes = 5;
    Model m = build_model(s, 2);
    CHECK(m.bn_states.size() == 2);
    CHECK(m.bn_states[0].channels() == 4);
    CHECK(m.bn_states[1].channels() == 8);
    const std::size_t conv = 4 * 1 * 9 + 4 + 8 * 4 * 9 + 8;
    const std::size_t bn = (4 + 4) + (8 + 8);
    const std::size_t head = 5 * 8 + 5;
    CHECK(m.params.total_dim() == conv + bn + head);
}

TEST_CASE("fresh models start from unit statistics and zero shifts") {
    ModelSpec s;
    s.arch = "mlp";
    s.input_shape = {3};
    s.hidden = {4};
    s.num_classes = 2;
    Model m = build_model(s, 7);
    CHECK(m.bn_states[0].running_mean == Tensor({4}));
    CHECK(m.bn_states[0].running_var == Tensor::full({4}, 1.0));
    CHECK(m.mode == StatsMode::INFERENCE);
    bool found_gamma = false;
    for (const auto& [name, t] : m.params) {
        if (name.find("gamma") != std::string::npos) {
            found_gamma = true;
            CHECK(t == Tensor::full({4}, 1.0));
        }
        if (name.find("bias") != std::string::npos || name.find("beta") != std::string::npos)
            CHECK(t == Tensor(t.shape()));
    }
    CHECK(found_gamma);
}

TEST_CASE("building is deterministic in the seed") {
    ModelSpec s;
    s.input_shape = {1, 8, 8};
    s.hidden = {4};
    s.num_classes = 3;
    Model a = build_model(s, 11);
    Model b = build_model(s, 11);
    Model c = build_model(s, 12);
    CHECK(a.params == b.params);
    CHECK_FALSE(a.params == c.params);
}

TEST_CASE("softmax rows match the closed form and sum to one") {
    Tensor probs = softmax_rows(Tensor({1, 2}, {2.0, 1.0}));
    CHECK(probs[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));

    auto rng = RngStream::named(19, "softmax");
    Tensor logits({5, 4});
    for (std::size_t i = 0; i < logits.numel(); ++i) logits[i] = rng.normal(0, 3);
    Tensor p = softmax_rows(logits);
    for (int n = 0; n < 5; ++n) {
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double v = p[static_cast<std::size_t>(n * 4 + k)];
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax is invariant to constant logit shifts") {
    Tensor logits({2, 3}, {1.0, -0.5, 2.0, 0.0, 4.0, -3.0});
    Tensor shifted = logits;
    for (std::size_t i = 0; i < shifted.numel(); ++i) shifted[i] += 50.0;
    Tensor a = softmax_rows(logits);
    Tensor b = softmax_rows(shifted);
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-10);
}

TEST_CASE("prediction ties resolve to the smallest class") {
    ModelSpec s;
    s.arch = "mlp";
    s.input_shape = {2};
    s.hidden = {3};
    s.num_classes = 4;
    Model m = build_model(s, 3);
    for (auto& [name, t] : m.params)
        if (name.find("head") != std::string::npos) t.fill(0.0);
    auto pred = predict(m, Tensor({1, 2}, {0.3, -0.7}));
    REQUIRE(pred.labels.size() == 1);
    CHECK(pred.labels[0] == 1);
    for (int k = 0; k < 4; ++k)
        CHECK(pred.probs[static_cast<std::size_t>(k)] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("prediction leaves running statistics alone by default") {
    ModelSpec s;
    s.input_shape = {1, 8, 8};
    s.hidden = {4};
    s.num_classes = 3;
    Model m = build_model(s, 5);
    auto before = m.bn_states;
    auto rng = RngStream::named(20, "predict");
    Tensor batch({2, 1, 8, 8});
    for (std::size_t i = 0; i < batch.numel(); ++i) batch[i] = rng.uniform();
    predict(m, batch);
    CHECK(m.bn_states == before);
    CHECK_THROWS_AS(predict(m, Tensor({1, 1, 8, 8}), StatsMode::UPDATED_STATS),
                    std::invalid_argument);
}

TEST_CASE("switching the mode field does not touch statistics") {
    ModelSpec s;
    s.arch = "mlp";
    s.input_shape = {4};
    s.hidden = {6};
    s.num_classes = 2;
    Model m = build_model(s, 9);
    auto before = m.bn_states;
    m.mode = StatsMode::UPDATED_STATS;
    m.mode = StatsMode::FIXED_STATS;
    m.mode = StatsMode::UPDATED_STATS;
    CHECK(m.bn_states == before);
}

TEST_CASE("accuracy counts matches sample by sample") {
    ModelSpec s;
    s.arch = "mlp";
    s.input_shape = {2};
    s.hidden = {4};
    s.num_classes = 2;
    Model m = build_model(s, 21);
    auto rng = RngStream::named(21, "acc");
    std::vector<Sample> data;
    for (int i = 0; i < 37; ++i) {
        Tensor x({2}, {rng.normal(), rng.normal()});
        data.push_back({x, 1 + static_cast<int>(rng.uniform_int(2))});
    }
    const double acc = accuracy(m, data, 8);
    int hits = 0;
    for (const auto& smp : data) {
        Tensor one({1, 2}, {smp.x[0], smp.x[1]});
        if (predict(m, one).labels[0] == smp.label) ++hits;
    }
    CHECK(acc == doctest::Approx(static_cast<double>(hits) / 37.0).epsilon(1e-15));
    CHECK_THROWS_AS(accuracy(m, {}), std::invalid_argument);
}
