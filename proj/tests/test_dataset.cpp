#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "oneshot/dataset.hpp"
#include "oneshot/rng.hpp"

using namespace oneshot;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / "oneshot_dataset_test";
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<Sample> byte_exact_samples(int n, int h, int w) {
    auto rng = RngStream::named(1, "bytes");
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) {
        Tensor x({1, h, w});
        for (std::size_t k = 0; k < x.numel(); ++k)
            x[k] = static_cast<double>(rng.uniform_int(256)) / 255.0;
        out.push_back({x, 1 + static_cast<int>(rng.uniform_int(10))});
    }
    return out;
}

}  // namespace

TEST_CASE("idx files round-trip byte-exact data") {
    TempDir tmp;
    auto samples = byte_exact_samples(12, 6, 5);
    save_idx_images(tmp.file("imgs.idx"), samples);
    save_idx_labels(tmp.file("labels.idx"), samples);
    auto loaded = load_idx_dataset(tmp.file("imgs.idx"), tmp.file("labels.idx"));
    REQUIRE(loaded.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i].x == samples[i].x);
        CHECK(loaded[i].label == samples[i].label);
    }
}

TEST_CASE("a full-intensity byte reads back as exactly one") {
    TempDir tmp;
    std::vector<Sample> samples = {{Tensor::full({1, 2, 2}, 1.0), 1}};
    save_idx_images(tmp.file("ones.idx"), samples);
    Tensor imgs = load_idx_images(tmp.file("ones.idx"));
    for (std::size_t i = 0; i < imgs.numel(); ++i) CHECK(imgs[i] == 1.0);
}

TEST_CASE("bad magic numbers are reported") {
    TempDir tmp;
    std::ofstream f(tmp.file("bad.idx"), std::ios::binary);
    const unsigned char junk[] = {0xde, 0xad, 0xbe, 0xef, 0, 0, 0, 1};
    f.write(reinterpret_cast<const char*>(junk), sizeof(junk));
    f.close();
    try {
        load_idx_images(tmp.file("bad.idx"));
        CHECK(false);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
}

TEST_CASE("truncated files report the byte offset") {
    TempDir tmp;
    auto samples = byte_exact_samples(3, 4, 4);
    save_idx_images(tmp.file("full.idx"), samples);
    std::ifstream in(tmp.file("full.idx"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(tmp.file("cut.idx"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    try {
        load_idx_images(tmp.file("cut.idx"));
        CHECK(false);
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("truncated at byte") != std::string::npos);
        CHECK(msg.find(std::to_string(bytes.size() / 2)) != std::string::npos);
    }
    CHECK_THROWS_AS(load_idx_images(tmp.file("empty.idx")), std::runtime_error);
}

TEST_CASE("image and label counts must agree") {
    TempDir tmp;
    auto samples = byte_exact_samples(5, 3, 3);
    save_idx_images(tmp.file("i.idx"), samples);
    samples.pop_back();
    save_idx_labels(tmp.file("l.idx"), samples);
    CHECK_THROWS_AS(load_idx_dataset(tmp.file("i.idx"), tmp.file("l.idx")),
                    std::runtime_error);
}

TEST_CASE("label writing validates its range") {
    TempDir tmp;
    std::vector<Sample> bad = {{Tensor({1, 2, 2}), 0}};
    CHECK_THROWS_AS(save_idx_labels(tmp.file("l.idx"), bad), std::invalid_argument);
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    CHECK_NOTHROW(validate(spec));
    spec.num_classes = 1;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.noise_scale = {0.1};
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.noise_scale = {0.1, -0.2};
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.amp_jitter = {0.5, 1.0};
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.amp_jitter = {0.5, 0.9};
    CHECK_NOTHROW(validate(spec));
}

TEST_CASE("synthetic data is deterministic with dense labels in range") {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.per_class = 40;
    spec.image_size = 12;
    spec.seed = 9;
    auto a = gen_synthetic(spec);
    auto b = gen_synthetic(spec);
    REQUIRE(a.size() == 120);
    std::set<int> labels;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].x.shape() == std::vector<int>{1, 12, 12});
        labels.insert(a[i].label);
        for (std::size_t k = 0; k < a[i].x.numel(); ++k) {
            CHECK(a[i].x[k] >= 0.0);
            CHECK(a[i].x[k] <= 1.0);
        }
    }
    CHECK(labels == std::set<int>{1, 2, 3});

    spec.seed = 10;
    auto c = gen_synthetic(spec);
    CHECK_FALSE(a[0].x == c[0].x);
}

TEST_CASE("classes sit on different blobs") {
    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.per_class = 50;
    spec.image_size = 12;
    spec.noise_scale = {0.0, 0.0};
    spec.center_jitter = 0.0;
    auto data = gen_synthetic(spec);
    Tensor mean1({144}), mean2({144});
    for (const auto& s : data) {
        Tensor& m = s.label == 1 ? mean1 : mean2;
        for (std::size_t k = 0; k < 144; ++k) m[k] += s.x[k] / 50.0;
    }
    double gap = 0.0;
    for (std::size_t k = 0; k < 144; ++k) gap += std::abs(mean1[k] - mean2[k]);
    CHECK(gap > 1.0);
}

TEST_CASE("generated digits cover ten classes deterministically") {
    auto a = gen_digits(6, 4);
    auto b = gen_digits(6, 4);
    REQUIRE(a.size() == 60);
    std::set<int> labels;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].x.shape() == std::vector<int>{1, 28, 28});
        labels.insert(a[i].label);
        for (std::size_t k = 0; k < a[i].x.numel(); ++k) {
            CHECK(a[i].x[k] >= 0.0);
            CHECK(a[i].x[k] <= 1.0);
        }
    }
    CHECK(labels.size() == 10);
    CHECK(*labels.begin() == 1);
    CHECK(*labels.rbegin() == 10);

    auto c = gen_digits(6, 5);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i].x == c[i].x)) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("digit images differ across classes") {
    auto data = gen_digits(2, 1);
    const Sample* one = nullptr;
    const Sample* two = nullptr;
    for (const auto& s : data) {
        if (!one && s.label == 1) one = &s;
        if (!two && s.label == 2) two = &s;
    }
    REQUIRE(one != nullptr);
    REQUIRE(two != nullptr);
    double gap = 0.0;
    for (std::size_t k = 0; k < one->x.numel(); ++k)
        gap += std::abs(one->x[k] - two->x[k]);
    CHECK(gap > 1.0);
}
