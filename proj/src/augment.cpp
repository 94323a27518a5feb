#include "oneshot/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oneshot {

void validate(const AugmentConfig& cfg) {
    auto check_prob = [](double p, const char* name) {
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    };
    check_prob(cfg.crop_prob, "crop_prob");
    check_prob(cfg.affine_prob, "affine_prob");
    check_prob(cfg.rotate_prob, "rotate_prob");
    check_prob(cfg.perspective_prob, "perspective_prob");
    if (!(cfg.crop_scale_min > 0.0) || cfg.crop_scale_min > cfg.crop_scale_max ||
        cfg.crop_scale_max > 1.0)
        throw std::invalid_argument("crop scale range must satisfy 0 < min <= max <= 1");
    if (cfg.max_translate < 0.0 || cfg.max_translate > 1.0)
        throw std::invalid_argument("max_translate must lie in [0,1]");
    if (cfg.max_shear_deg < 0.0 || cfg.max_shear_deg >= 90.0)
        throw std::invalid_argument("max_shear_deg must lie in [0,90)");
    if (cfg.max_rotate_deg < 0.0 || cfg.max_rotate_deg >= 180.0)
        throw std::invalid_argument("max_rotate_deg must lie in [0,180)");
    if (cfg.perspective_distortion < 0.0 || cfg.perspective_distortion >= 1.0)
        throw std::invalid_argument("perspective_distortion must lie in [0,1)");
}

Homography identity_homography() {
    return {1, 0, 0, 0, 1, 0, 0, 0, 1};
}

Homography solve_homography(const std::array<std::array<double, 2>, 4>& src,
                            const std::array<std::array<double, 2>, 4>& dst) {
    double a[8][9] = {};
    for (int p = 0; p < 4; ++p) {
        const double x = src[static_cast<std::size_t>(p)][0];
        const double y = src[static_cast<std::size_t>(p)][1];
        const double u = dst[static_cast<std::size_t>(p)][0];
        const double v = dst[static_cast<std::size_t>(p)][1];
        double* r0 = a[2 * p];
        double* r1 = a[2 * p + 1];
        r0[0] = x; r0[1] = y; r0[2] = 1; r0[6] = -x * u; r0[7] = -y * u; r0[8] = u;
        r1[3] = x; r1[4] = y; r1[5] = 1; r1[6] = -x * v; r1[7] = -y * v; r1[8] = v;
    }
    for (int col = 0; col < 8; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw std::invalid_argument("degenerate corner correspondences");
        std::swap_ranges(a[col], a[col] + 9, a[pivot]);
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
        }
    }
    Homography h;
    for (int i = 0; i < 8; ++i) h[static_cast<std::size_t>(i)] = a[i][8] / a[i][i];
    h[8] = 1.0;
    return h;
}

namespace {

double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-12 ? r : x;
}

double sample_bilinear(const Tensor& img, int c, double x, double y) {
    const int H = img.dim(1), W = img.dim(2);
    x = snap(x);
    y = snap(y);
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto at = [&](int yy, int xx) -> double {
        if (xx < 0 || xx >= W || yy < 0 || yy >= H) return 0.0;
        return img[(static_cast<std::size_t>(c) * H + yy) * W + xx];
    };
    return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
           fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
}

void check_image(const Tensor& img) {
    if (img.ndim() != 3)
        throw std::invalid_argument("expected a [C,H,W] image, got " +
                                    shape_string(img.shape()));
}

}  // namespace

Tensor warp_bilinear(const Tensor& img, const Homography& h, int out_h, int out_w) {
    check_image(img);
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("warp output size must be positive");
    const int C = img.dim(0);
    Tensor out({C, out_h, out_w});
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            const double denom = h[6] * j + h[7] * i + h[8];
            if (std::abs(denom) < 1e-12) continue;
            const double sx = (h[0] * j + h[1] * i + h[2]) / denom;
            const double sy = (h[3] * j + h[4] * i + h[5]) / denom;
            for (int c = 0; c < C; ++c) {
                const double v = sample_bilinear(img, c, sx, sy);
                out[(static_cast<std::size_t>(c) * out_h + i) * out_w + j] =
                    std::clamp(v, 0.0, 1.0);
            }
        }
    return out;
}

Tensor crop_resize(const Tensor& img, int top, int left, int side) {
    check_image(img);
    const int H = img.dim(1), W = img.dim(2);
    if (side < 1 || top < 0 || left < 0 || top + side > H || left + side > W)
        throw std::invalid_argument("crop window [" + std::to_string(top) + "," +
                                    std::to_string(left) + "]+" + std::to_string(side) +
                                    " outside image " + shape_string(img.shape()));
    Homography h = identity_homography();
    h[0] = W > 1 ? static_cast<double>(side - 1) / (W - 1) : 0.0;
    h[2] = left;
    h[4] = H > 1 ? static_cast<double>(side - 1) / (H - 1) : 0.0;
    h[5] = top;
    return warp_bilinear(img, h, H, W);
}

Tensor affine_image(const Tensor& img, double translate_x, double translate_y,
                    double shear_deg) {
    check_image(img);
    const int H = img.dim(1), W = img.dim(2);
    const double cy = (H - 1) / 2.0;
    const double t = std::tan(shear_deg * M_PI / 180.0);
    Homography h = identity_homography();
    h[1] = -t;
    h[2] = t * (cy + translate_y) - translate_x;
    h[5] = -translate_y;
    return warp_bilinear(img, h, H, W);
}

Tensor rotate_image(const Tensor& img, double degrees) {
    check_image(img);
    const int H = img.dim(1), W = img.dim(2);
    const double cx = (W - 1) / 2.0;
    const double cy = (H - 1) / 2.0;
    const double rad = degrees * M_PI / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    Homography h = identity_homography();
    h[0] = c;
    h[1] = s;
    h[2] = cx - c * cx - s * cy;
    h[3] = -s;
    h[4] = c;
    h[5] = cy + s * cx - c * cy;
    return warp_bilinear(img, h, H, W);
}

Tensor perspective_image(const Tensor& img,
                         const std::array<std::array<double, 2>, 4>& moved_corners) {
    check_image(img);
    const int H = img.dim(1), W = img.dim(2);
    const std::array<std::array<double, 2>, 4> original = {{{0.0, 0.0},
                                                            {W - 1.0, 0.0},
                                                            {W - 1.0, H - 1.0},
                                                            {0.0, H - 1.0}}};
    Homography h = solve_homography(moved_corners, original);
    return warp_bilinear(img, h, H, W);
}

Tensor augment_image(const Tensor& img, const AugmentConfig& cfg, RngStream& rng) {
    validate(cfg);
    const bool active = cfg.crop_prob > 0.0 || cfg.affine_prob > 0.0 ||
                        cfg.rotate_prob > 0.0 || cfg.perspective_prob > 0.0;
    if (!active) {
        for (int gate = 0; gate < 4; ++gate) rng.bernoulli(0.0);
        return img;
    }
    check_image(img);
    const int H = img.dim(1), W = img.dim(2);
    Tensor out = img;

    if (rng.bernoulli(cfg.crop_prob)) {
        int side = -1, top = 0, left = 0;
        for (int attempt = 0; attempt < 10 && side < 0; ++attempt) {
            const double s = rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
            const int cand =
                static_cast<int>(std::lround(std::sqrt(s * H * W)));
            if (cand >= 1 && cand <= H && cand <= W) side = cand;
        }
        if (side < 0) side = std::min(H, W);
        top = rng.uniform_int(H - side + 1);
        left = rng.uniform_int(W - side + 1);
        out = crop_resize(out, top, left, side);
    }
    if (rng.bernoulli(cfg.affine_prob)) {
        const double dx = rng.uniform(-cfg.max_translate * W, cfg.max_translate * W);
        const double dy = rng.uniform(-cfg.max_translate * H, cfg.max_translate * H);
        const double sh = rng.uniform(-cfg.max_shear_deg, cfg.max_shear_deg);
        out = affine_image(out, dx, dy, sh);
    }
    if (rng.bernoulli(cfg.rotate_prob)) {
        const double deg = rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg);
        out = rotate_image(out, deg);
    }
    if (rng.bernoulli(cfg.perspective_prob)) {
        const double hw = cfg.perspective_distortion * (W - 1) / 2.0;
        const double hh = cfg.perspective_distortion * (H - 1) / 2.0;
        std::array<std::array<double, 2>, 4> moved;
        const double sign_x[4] = {1, -1, -1, 1};
        const double sign_y[4] = {1, 1, -1, -1};
        const std::array<std::array<double, 2>, 4> base = {{{0.0, 0.0},
                                                            {W - 1.0, 0.0},
                                                            {W - 1.0, H - 1.0},
                                                            {0.0, H - 1.0}}};
        for (int k = 0; k < 4; ++k) {
            const double dx = rng.uniform(0.0, hw);
            const double dy = rng.uniform(0.0, hh);
            moved[static_cast<std::size_t>(k)] = {
                base[static_cast<std::size_t>(k)][0] + sign_x[k] * dx,
                base[static_cast<std::size_t>(k)][1] + sign_y[k] * dy};
        }
        out = perspective_image(out, moved);
    }
    return out;
}

Sample augment(const Sample& s, const AugmentConfig& cfg, RngStream& rng) {
    return {augment_image(s.x, cfg, rng), s.label};
}

std::vector<Sample> replicate(const Sample& s, int copies, const AugmentConfig& cfg,
                              RngStream& rng) {
    if (copies < 0) throw std::invalid_argument("copy count must be non-negative");
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(copies));
    for (int i = 0; i < copies; ++i) out.push_back(augment(s, cfg, rng));
    return out;
}

}  // namespace oneshot
