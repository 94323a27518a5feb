#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "oneshot/augment.hpp"
#include "oneshot/rng.hpp"

using namespace oneshot;

namespace {

Tensor random_image(RngStream& rng, int c, int h, int w) {
    Tensor img({c, h, w});
    for (std::size_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
    return img;
}

AugmentConfig zero_config() {
    AugmentConfig cfg;
    cfg.crop_prob = 0.0;
    cfg.affine_prob = 0.0;
    cfg.rotate_prob = 0.0;
    cfg.perspective_prob = 0.0;
    return cfg;
}

AugmentConfig identity_config() {
    AugmentConfig cfg;
    cfg.crop_prob = 1.0;
    cfg.affine_prob = 1.0;
    cfg.rotate_prob = 1.0;
    cfg.perspective_prob = 1.0;
    cfg.crop_scale_min = 1.0;
    cfg.crop_scale_max = 1.0;
    cfg.max_translate = 0.0;
    cfg.max_shear_deg = 0.0;
    cfg.max_rotate_deg = 0.0;
    cfg.perspective_distortion = 0.0;
    return cfg;
}

AugmentConfig always_config() {
    AugmentConfig cfg;
    cfg.crop_prob = 1.0;
    cfg.affine_prob = 1.0;
    cfg.rotate_prob = 1.0;
    cfg.perspective_prob = 1.0;
    return cfg;
}

// Independent re-implementation of the sampling contract for cross-checking.
Tensor naive_warp(const Tensor& img, const Homography& h, int out_h, int out_w) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    Tensor out({C, out_h, out_w});
    auto snap = [](double v) {
        const double r = std::round(v);
        return std::abs(v - r) < 1e-12 ? r : v;
    };
    auto pixel = [&](int c, int yy, int xx) -> double {
        if (xx < 0 || xx >= W || yy < 0 || yy >= H) return 0.0;
        return img[(static_cast<std::size_t>(c) * H + yy) * W + xx];
    };
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            const double denom = h[6] * j + h[7] * i + h[8];
            if (std::abs(denom) < 1e-12) continue;
            const double sx = snap((h[0] * j + h[1] * i + h[2]) / denom);
            const double sy = snap((h[3] * j + h[4] * i + h[5]) / denom);
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < C; ++c) {
                const double v =
                    (1 - fy) * ((1 - fx) * pixel(c, y0, x0) + fx * pixel(c, y0, x0 + 1)) +
                    fy * ((1 - fx) * pixel(c, y0 + 1, x0) + fx * pixel(c, y0 + 1, x0 + 1));
                out[(static_cast<std::size_t>(c) * out_h + i) * out_w + j] =
                    std::clamp(v, 0.0, 1.0);
            }
        }
    return out;
}

std::string image_key(const Tensor& t) {
    std::string key(t.numel() * sizeof(double), '\0');
    std::memcpy(key.data(), t.data(), key.size());
    return key;
}

}  // namespace

TEST_CASE("config validation rejects out-of-range knobs") {
    AugmentConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.crop_prob = 1.5;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = AugmentConfig{};
    cfg.crop_scale_min = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = AugmentConfig{};
    cfg.crop_scale_min = 0.9;
    cfg.crop_scale_max = 0.5;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = AugmentConfig{};
    cfg.max_shear_deg = 90.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = AugmentConfig{};
    cfg.max_rotate_deg = 180.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = AugmentConfig{};
    cfg.perspective_distortion = 1.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("identity-width ranges reproduce the input exactly") {
    auto rng = RngStream::named(1, "img");
    Tensor img = random_image(rng, 1, 8, 8);
    auto aug_rng = RngStream::named(1, "aug");
    Tensor out = augment_image(img, identity_config(), aug_rng);
    REQUIRE(out.shape() == img.shape());
    for (std::size_t i = 0; i < img.numel(); ++i)
        CHECK(std::abs(out[i] - img[i]) < 1e-10);
}

TEST_CASE("zero gate probabilities pass the image through untouched") {
    auto rng = RngStream::named(2, "img");
    Tensor img = random_image(rng, 2, 5, 5);
    auto aug_rng = RngStream::named(2, "aug");
    CHECK(augment_image(img, zero_config(), aug_rng) == img);
}

TEST_CASE("half-turn rotation flips both axes exactly") {
    auto rng = RngStream::named(3, "img");
    Tensor img = random_image(rng, 1, 6, 6);
    Tensor out = rotate_image(img, 180.0);
    const int H = 6, W = 6;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            CHECK(out[static_cast<std::size_t>(y * W + x)] ==
                  img[static_cast<std::size_t>((H - 1 - y) * W + (W - 1 - x))]);
    Tensor flat = Tensor::full({1, 4, 4}, 0.25);
    CHECK(rotate_image(flat, 180.0) == flat);
}

TEST_CASE("zero-angle transforms are exact identities") {
    auto rng = RngStream::named(4, "img");
    Tensor img = random_image(rng, 1, 7, 7);
    CHECK(rotate_image(img, 0.0) == img);
    CHECK(affine_image(img, 0.0, 0.0, 0.0) == img);
    const std::array<std::array<double, 2>, 4> corners = {
        {{0.0, 0.0}, {6.0, 0.0}, {6.0, 6.0}, {0.0, 6.0}}};
    CHECK(perspective_image(img, corners) == img);
    CHECK(crop_resize(img, 0, 0, 7) == img);
}

TEST_CASE("warp matches a naive bilinear oracle") {
    auto rng = RngStream::named(5, "img");
    Tensor img = random_image(rng, 1, 8, 8);
    const double rad = 30.0 * M_PI / 180.0;
    const double c = std::cos(rad), s = std::sin(rad), cx = 3.5, cy = 3.5;
    Homography h = {c, s, cx - c * cx - s * cy, -s, c, cy + s * cx - c * cy, 0, 0, 1};
    Tensor got = warp_bilinear(img, h, 8, 8);
    Tensor want = naive_warp(img, h, 8, 8);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.numel(); ++i)
        CHECK(std::abs(got[i] - want[i]) < 1e-10);

    Homography skew = {0.9, 0.1, 0.4, -0.05, 1.1, -0.3, 0.002, -0.001, 1.0};
    got = warp_bilinear(img, skew, 8, 8);
    want = naive_warp(img, skew, 8, 8);
    for (std::size_t i = 0; i < got.numel(); ++i)
        CHECK(std::abs(got[i] - want[i]) < 1e-10);
}

TEST_CASE("crop keeps its window corners") {
    auto rng = RngStream::named(6, "img");
    Tensor img = random_image(rng, 1, 9, 9);
    const int top = 2, left = 3, side = 4;
    Tensor out = crop_resize(img, top, left, side);
    CHECK(out.shape() == img.shape());
    CHECK(out[0] == img[static_cast<std::size_t>(top * 9 + left)]);
    CHECK(out[8] == img[static_cast<std::size_t>(top * 9 + left + side - 1)]);
    CHECK(out[8 * 9] == img[static_cast<std::size_t>((top + side - 1) * 9 + left)]);
    CHECK(out[8 * 9 + 8] ==
          img[static_cast<std::size_t>((top + side - 1) * 9 + left + side - 1)]);
    CHECK_THROWS_AS(crop_resize(img, 6, 6, 4), std::invalid_argument);
    CHECK_THROWS_AS(crop_resize(img, -1, 0, 4), std::invalid_argument);
}

TEST_CASE("translation fills uncovered pixels with zeros") {
    Tensor img = Tensor::full({1, 6, 6}, 1.0);
    Tensor out = affine_image(img, 2.5, 0.0, 0.0);
    for (int y = 0; y < 6; ++y) {
        CHECK(out[static_cast<std::size_t>(y * 6 + 0)] == 0.0);
        CHECK(out[static_cast<std::size_t>(y * 6 + 1)] == 0.0);
        CHECK(out[static_cast<std::size_t>(y * 6 + 5)] == 1.0);
    }
}

TEST_CASE("outputs stay inside the unit interval and keep their shape") {
    auto rng = RngStream::named(7, "img");
    Tensor img = random_image(rng, 1, 10, 10);
    for (int seed = 0; seed < 30; ++seed) {
        auto aug_rng = RngStream::named(static_cast<std::uint64_t>(seed), "range");
        Tensor out = augment_image(img, AugmentConfig{}, aug_rng);
        CHECK(out.shape() == img.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) {
            CHECK(out[i] >= 0.0);
            CHECK(out[i] <= 1.0);
        }
    }
}

TEST_CASE("augmentation is deterministic per stream") {
    auto rng = RngStream::named(8, "img");
    Tensor img = random_image(rng, 1, 8, 8);
    auto r1 = RngStream::named(99, "aug");
    auto r2 = RngStream::named(99, "aug");
    CHECK(augment_image(img, AugmentConfig{}, r1) ==
          augment_image(img, AugmentConfig{}, r2));
}

TEST_CASE("one hundred seeds give one hundred different images") {
    auto rng = RngStream::named(9, "img");
    Tensor img = random_image(rng, 1, 8, 8);
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto aug_rng = RngStream::named(seed, "collision");
        seen.insert(image_key(augment_image(img, always_config(), aug_rng)));
    }
    CHECK(seen.size() == 100);
}

TEST_CASE("replication preserves labels and count") {
    auto rng = RngStream::named(10, "img");
    Sample s{random_image(rng, 1, 8, 8), 4};
    auto aug_rng = RngStream::named(10, "rep");
    auto copies = replicate(s, 32, AugmentConfig{}, aug_rng);
    CHECK(copies.size() == 32);
    for (const auto& c : copies) {
        CHECK(c.label == 4);
        CHECK(c.x.shape() == s.x.shape());
    }
    auto one_rng = RngStream::named(11, "rep");
    auto single = replicate(s, 1, zero_config(), one_rng);
    REQUIRE(single.size() == 1);
    CHECK(single[0].x == s.x);
    CHECK(single[0].label == 4);
    CHECK_THROWS_AS(replicate(s, -1, AugmentConfig{}, one_rng), std::invalid_argument);
}

TEST_CASE("homography solving maps the given corners") {
    const std::array<std::array<double, 2>, 4> src = {
        {{0.0, 0.0}, {7.0, 0.0}, {7.0, 7.0}, {0.0, 7.0}}};
    const std::array<std::array<double, 2>, 4> dst = {
        {{1.0, 0.5}, {6.0, -0.5}, {7.5, 6.0}, {-0.5, 7.0}}};
    Homography h = solve_homography(src, dst);
    for (int k = 0; k < 4; ++k) {
        const double x = src[static_cast<std::size_t>(k)][0];
        const double y = src[static_cast<std::size_t>(k)][1];
        const double denom = h[6] * x + h[7] * y + h[8];
        const double u = (h[0] * x + h[1] * y + h[2]) / denom;
        const double v = (h[3] * x + h[4] * y + h[5]) / denom;
        CHECK(u == doctest::Approx(dst[static_cast<std::size_t>(k)][0]).epsilon(1e-9));
        CHECK(v == doctest::Approx(dst[static_cast<std::size_t>(k)][1]).epsilon(1e-9));
    }
    const std::array<std::array<double, 2>, 4> collinear = {
        {{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}}};
    CHECK_THROWS_AS(solve_homography(collinear, dst), std::invalid_argument);
}
