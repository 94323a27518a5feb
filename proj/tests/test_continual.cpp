#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oneshot/continual.hpp"
#include "oneshot/gradcheck.hpp"
#include "oneshot/rng.hpp"

using namespace oneshot;

namespace {

std::vector<Sample> tagged_data(int n, int label = 7) {
    std::vector<Sample> data;
    for (int i = 0; i < n; ++i)
        data.push_back({Tensor({1}, {static_cast<double>(i)}), label});
    return data;
}

Model tiny_model(int num_classes = 3, std::uint64_t seed = 5) {
    ModelSpec spec;
    spec.arch = "mlp";
    spec.input_shape = {4};
    spec.hidden = {5};
    spec.num_classes = num_classes;
    return build_model(spec, seed);
}

std::vector<Sample> tiny_dataset(int n, int num_classes, std::uint64_t seed) {
    auto rng = RngStream::named(seed, "tinydata");
    std::vector<Sample> data;
    for (int i = 0; i < n; ++i) {
        Tensor x({4});
        for (std::size_t k = 0; k < 4; ++k) x[k] = rng.uniform();
        data.push_back({x, 1 + static_cast<int>(rng.uniform_int(
                               static_cast<std::uint64_t>(num_classes)))});
    }
    return data;
}

AugmentConfig no_augment() {
    AugmentConfig cfg;
    cfg.crop_prob = 0.0;
    cfg.affine_prob = 0.0;
    cfg.rotate_prob = 0.0;
    cfg.perspective_prob = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("replay buffers draw without replacement") {
    auto data = tagged_data(50);
    auto rng = RngStream::named(1, "buf");
    auto buf = make_replay_buffer(data, 20, rng);
    CHECK(buf.items.size() == 20);
    std::set<double> values;
    for (const auto& s : buf.items) values.insert(s.x[0]);
    CHECK(values.size() == 20);
    for (double v : values) {
        CHECK(v >= 0.0);
        CHECK(v < 50.0);
    }
    CHECK_THROWS_AS(make_replay_buffer(data, 51, rng), std::invalid_argument);
    CHECK_THROWS_AS(make_replay_buffer(data, 0, rng), std::invalid_argument);
}

TEST_CASE("buffer creation is deterministic") {
    auto data = tagged_data(30);
    auto r1 = RngStream::named(2, "buf");
    auto r2 = RngStream::named(2, "buf");
    auto b1 = make_replay_buffer(data, 10, r1);
    auto b2 = make_replay_buffer(data, 10, r2);
    REQUIRE(b1.items.size() == b2.items.size());
    for (std::size_t i = 0; i < b1.items.size(); ++i)
        CHECK(b1.items[i].x == b2.items[i].x);
}

TEST_CASE("buffer batches stay inside the buffer without repeats") {
    auto data = tagged_data(40);
    auto rng = RngStream::named(3, "buf");
    auto buf = make_replay_buffer(data, 25, rng);
    std::set<double> pool;
    for (const auto& s : buf.items) pool.insert(s.x[0]);
    Batch b = sample_buffer_batch(buf, 10, rng);
    CHECK(b.x.shape() == std::vector<int>{10, 1});
    std::set<double> drawn;
    for (int i = 0; i < 10; ++i) {
        drawn.insert(b.x[static_cast<std::size_t>(i)]);
        CHECK(pool.count(b.x[static_cast<std::size_t>(i)]) == 1);
    }
    CHECK(drawn.size() == 10);
    CHECK_THROWS_AS(sample_buffer_batch(buf, 26, rng), std::invalid_argument);
}

TEST_CASE("composed batches mix buffer rows with labeled copies") {
    auto data = tagged_data(100, 7);
    auto rng = RngStream::named(4, "compose");
    auto buf = make_replay_buffer(data, 64, rng);
    Sample new_sample{Tensor({1}, {0.5}), 3};
    auto composed = compose_minibatch(buf, 32, new_sample, 32, no_augment(), rng);
    CHECK(composed.buffer_count == 32);
    CHECK(composed.new_count == 32);
    CHECK(composed.batch.x.dim(0) == 64);
    CHECK(composed.from_new.size() == 64);
    int marked = 0, labeled = 0;
    for (int i = 0; i < 64; ++i) {
        const bool is_new = composed.from_new[static_cast<std::size_t>(i)] != 0;
        if (is_new) ++marked;
        if (composed.batch.labels[static_cast<std::size_t>(i)] == 3) ++labeled;
        CHECK(composed.batch.labels[static_cast<std::size_t>(i)] == (is_new ? 3 : 7));
    }
    CHECK(marked == 32);
    CHECK(labeled == 32);
}

TEST_CASE("composition shuffles rather than concatenates") {
    auto data = tagged_data(100, 7);
    auto rng = RngStream::named(5, "compose");
    auto buf = make_replay_buffer(data, 64, rng);
    Sample new_sample{Tensor({1}, {0.5}), 3};
    auto composed = compose_minibatch(buf, 32, new_sample, 32, no_augment(), rng);
    bool interleaved = false;
    for (int i = 1; i < 64; ++i)
        if (composed.from_new[static_cast<std::size_t>(i)] !=
            composed.from_new[static_cast<std::size_t>(i - 1)])
            interleaved = true;
    CHECK(interleaved);
}

TEST_CASE("a single-sample buffer still composes") {
    auto data = tagged_data(1, 2);
    auto rng = RngStream::named(6, "compose");
    auto buf = make_replay_buffer(data, 1, rng);
    Sample new_sample{Tensor({1}, {0.9}), 1};
    auto composed = compose_minibatch(buf, 1, new_sample, 1, no_augment(), rng);
    CHECK(composed.batch.x.dim(0) == 2);
    CHECK(composed.buffer_count == 1);
    CHECK(composed.new_count == 1);
    CHECK_THROWS_AS(compose_minibatch(buf, 1, new_sample, 0, no_augment(), rng),
                    std::invalid_argument);
}

TEST_CASE("mixed batches use distinct pool samples without augmentation") {
    auto buf_data = tagged_data(50, 7);
    std::vector<Sample> pool_data;
    for (int i = 0; i < 40; ++i)
        pool_data.push_back({Tensor({1}, {100.0 + i}), 3});
    auto rng = RngStream::named(7, "mixed");
    auto buf = make_replay_buffer(buf_data, 50, rng);
    ReplayBuffer pool{pool_data};
    auto composed = compose_mixed_batch(buf, 16, pool, 16, rng);
    CHECK(composed.batch.x.dim(0) == 32);
    std::set<double> new_values;
    for (int i = 0; i < 32; ++i) {
        if (!composed.from_new[static_cast<std::size_t>(i)]) continue;
        const double v = composed.batch.x[static_cast<std::size_t>(i)];
        CHECK(v >= 100.0);
        new_values.insert(v);
        CHECK(composed.batch.labels[static_cast<std::size_t>(i)] == 3);
    }
    CHECK(new_values.size() == 16);
    CHECK_THROWS_AS(compose_mixed_batch(buf, 16, pool, 41, rng), std::invalid_argument);
}

TEST_CASE("hand projection oracle") {
    FlatProjection p = gem_project({1.0, -1.0}, {0.0, 1.0});
    CHECK(p.dot == -1.0);
    CHECK(p.projected);
    CHECK_FALSE(p.degenerate);
    CHECK(p.grad == std::vector<double>{1.0, 0.0});
    CHECK(p.post_dot == 0.0);
}

TEST_CASE("antiparallel gradients project to zero") {
    std::vector<double> ref = {0.3, -1.2, 0.7};
    std::vector<double> g = {-0.3, 1.2, -0.7};
    FlatProjection p = gem_project(g, ref);
    CHECK(p.projected);
    for (double v : p.grad) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("agreeing gradients pass through untouched") {
    std::vector<double> ref = {1.0, 2.0, 3.0};
    std::vector<double> g = {0.5, 0.1, 0.2};
    FlatProjection p = gem_project(g, ref);
    CHECK_FALSE(p.projected);
    CHECK(p.grad == g);
    CHECK(p.post_dot == p.dot);
}

TEST_CASE("a zero reference is flagged degenerate") {
    std::vector<double> ref = {0.0, 0.0};
    std::vector<double> g = {1.0, -2.0};
    FlatProjection p = gem_project(g, ref);
    CHECK(p.degenerate);
    CHECK_FALSE(p.projected);
    CHECK(p.grad == g);
}

TEST_CASE("projection is idempotent") {
    auto rng = RngStream::named(8, "idem");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> g(20), ref(20);
        for (std::size_t i = 0; i < 20; ++i) {
            g[i] = rng.normal();
            ref[i] = rng.normal();
        }
        FlatProjection once = gem_project(g, ref);
        FlatProjection twice = gem_project(once.grad, ref);
        for (std::size_t i = 0; i < 20; ++i)
            CHECK(std::abs(twice.grad[i] - once.grad[i]) < 1e-12);
    }
}

TEST_CASE("projected gradients never oppose the reference") {
    auto rng = RngStream::named(9, "pairs");
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> g(100), ref(100);
        for (std::size_t i = 0; i < 100; ++i) {
            g[i] = rng.normal();
            ref[i] = rng.normal();
        }
        FlatProjection p = gem_project(g, ref);
        CHECK(p.post_dot >= -1e-10);
        if (p.dot >= 0.0) CHECK(p.grad == g);
    }
}

TEST_CASE("size mismatches are rejected") {
    CHECK_THROWS_AS(gem_project(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("the parameter-set wrapper agrees with the flat projection") {
    auto rng = RngStream::named(10, "wrap");
    ParameterSet g, ref;
    g.insert("a", Tensor({3}, {rng.normal(), rng.normal(), rng.normal()}));
    g.insert("b", Tensor({2}, {rng.normal(), rng.normal()}));
    ref.insert("a", Tensor({3}, {rng.normal(), rng.normal(), rng.normal()}));
    ref.insert("b", Tensor({2}, {rng.normal(), rng.normal()}));
    GemProjection p = gem_project(g, ref);
    FlatProjection flat = gem_project(g.flatten(), ref.flatten());
    CHECK(p.dot == flat.dot);
    CHECK(p.post_dot == flat.post_dot);
    CHECK(p.projected == flat.projected);
    CHECK(p.grads.flatten() == flat.grad);

    ParameterSet wrong;
    wrong.insert("a", Tensor({3}));
    wrong.insert("c", Tensor({2}));
    CHECK_THROWS_AS(gem_project(g, wrong), std::out_of_range);
}

TEST_CASE("the penalty is zero with zero gradient at the anchor") {
    Model model = tiny_model();
    auto data = tiny_dataset(12, 3, 11);
    auto rng = RngStream::named(11, "fisher");
    auto buf = make_replay_buffer(data, 12, rng);
    FisherDiag fd = ewc_fisher(model, buf);
    CHECK(fd.anchor == model.params);

    Model penalized = model;
    attach_ewc_penalty(penalized, fd, 100.0);
    Batch b = make_batch(data, {0, 1, 2, 3});
    double plain = model.graph.forward(model.context(StatsMode::FIXED_STATS), b.x, b.labels);
    double with_penalty = penalized.graph.forward(
        penalized.context(StatsMode::FIXED_STATS), b.x, b.labels);
    CHECK(with_penalty == plain);

    auto plain_grads = model.graph.backward();
    auto pen_grads = penalized.graph.backward();
    for (const auto& [name, t] : plain_grads) CHECK(pen_grads.at(name) == t);
}

TEST_CASE("the penalty gradient is the weighted parameter offset") {
    Model model = tiny_model();
    auto data = tiny_dataset(10, 3, 12);
    auto rng = RngStream::named(12, "fisher");
    auto buf = make_replay_buffer(data, 10, rng);
    FisherDiag fd = ewc_fisher(model, buf);
    const double lambda = 3.5;

    Model moved = model;
    attach_ewc_penalty(moved, fd, lambda);
    auto shift = RngStream::named(13, "shift");
    for (auto& [name, t] : moved.params)
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] += 0.1 * shift.normal();

    Batch b = make_batch(data, {0, 1, 2});
    Model plain = model;
    plain.params = moved.params;
    double base_loss = plain.graph.forward(plain.context(StatsMode::FIXED_STATS),
                                           b.x, b.labels);
    auto base_grads = plain.graph.backward();
    double pen_loss = moved.graph.forward(moved.context(StatsMode::FIXED_STATS),
                                          b.x, b.labels);
    auto pen_grads = moved.graph.backward();

    double want_penalty = 0.0;
    for (const auto& [name, t] : moved.params) {
        const Tensor& f = fd.fisher.at(name);
        const Tensor& a = fd.anchor.at(name);
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double d = t[i] - a[i];
            want_penalty += 0.5 * lambda * f[i] * d * d;
            const double analytic = base_grads.at(name)[i] + lambda * f[i] * d;
            CHECK(pen_grads.at(name)[i] == doctest::Approx(analytic).epsilon(1e-10));
        }
    }
    CHECK(std::abs((pen_loss - base_loss) - want_penalty) < 1e-12);
    CHECK_THROWS_AS(attach_ewc_penalty(moved, fd, -1.0), std::invalid_argument);
}

TEST_CASE("fisher of a single sample is the squared gradient") {
    Model model = tiny_model();
    auto data = tiny_dataset(1, 3, 14);
    ReplayBuffer buf{data};
    FisherDiag fd = ewc_fisher(model, buf);

    Batch b = make_batch(data, {0});
    model.graph.forward(model.context(StatsMode::FIXED_STATS), b.x, b.labels);
    auto grads = model.graph.backward();
    for (const auto& [name, g] : grads) {
        const Tensor& f = fd.fisher.at(name);
        for (std::size_t i = 0; i < g.numel(); ++i)
            CHECK(f[i] == doctest::Approx(g[i] * g[i]).epsilon(1e-12));
    }
}

TEST_CASE("fisher entries are non-negative and deterministic") {
    Model model = tiny_model();
    auto data = tiny_dataset(8, 3, 15);
    ReplayBuffer buf{data};
    FisherDiag f1 = ewc_fisher(model, buf);
    FisherDiag f2 = ewc_fisher(model, buf);
    CHECK(f1.fisher == f2.fisher);
    for (const auto& [name, t] : f1.fisher)
        for (std::size_t i = 0; i < t.numel(); ++i) CHECK(t[i] >= 0.0);
    ReplayBuffer empty;
    CHECK_THROWS_AS(ewc_fisher(model, empty), std::invalid_argument);
}

TEST_CASE("fisher passes leave running statistics alone") {
    Model model = tiny_model();
    auto before = model.bn_states;
    auto data = tiny_dataset(6, 3, 16);
    ReplayBuffer buf{data};
    ewc_fisher(model, buf);
    CHECK(model.bn_states == before);
}

TEST_CASE("penalty gradients pass a finite-difference check") {
    Model model = tiny_model();
    auto weights = RngStream::named(17, "fisher");
    FisherDiag fd;
    fd.anchor = model.params;
    for (const auto& [name, t] : model.params) {
        Tensor f(t.shape());
        for (std::size_t i = 0; i < f.numel(); ++i) f[i] = 2.0 * weights.uniform();
        fd.fisher.insert(name, f);
    }

    Graph g;
    NodeId total = -1;
    for (const auto& [name, t] : model.params) {
        NodeId p = g.param(name, t.shape());
        NodeId q = g.quadratic_penalty(p, fd.fisher.at(name), fd.anchor.at(name), 7.0,
                                       "pen." + name);
        total = total < 0 ? q : g.add(total, q);
    }
    g.set_loss(total);

    auto shift = RngStream::named(18, "shift");
    for (int point = 0; point < 20; ++point) {
        ParameterSet probe = model.params;
        for (auto& [name, t] : probe)
            for (std::size_t i = 0; i < t.numel(); ++i) t[i] += 0.2 * shift.normal();
        auto res = finite_diff_check(g, probe, {}, StatsMode::FIXED_STATS,
                                     Tensor::scalar(0.0), {}, 1e-5, 1e-6);
        CHECK(res.ok);
        CHECK(res.max_err < 1e-6);
    }
}

TEST_CASE("reference gradients match a direct backward pass") {
    Model model = tiny_model();
    model.mode = StatsMode::FIXED_STATS;
    auto data = tiny_dataset(20, 3, 19);
    auto rng = RngStream::named(19, "ref");
    auto buf = make_replay_buffer(data, 20, rng);

    auto r1 = RngStream::named(20, "draw");
    auto r2 = RngStream::named(20, "draw");
    ParameterSet ref = gem_reference_gradient(model, buf, 8, r1);
    Batch b = sample_buffer_batch(buf, 8, r2);
    model.graph.forward(model.context(), b.x, b.labels);
    auto direct = model.graph.backward();
    CHECK(ref == direct);
    ReplayBuffer empty;
    CHECK_THROWS_AS(gem_reference_gradient(model, empty, 8, r1), std::invalid_argument);
}
