#pragma once

#include <array>
#include <vector>

#include "oneshot/rng.hpp"
#include "oneshot/tensor.hpp"

namespace oneshot {

/// Randomized image transformations. Four families are applied in a fixed
/// order, crop, affine, rotation, perspective, each gated by an independent
/// coin flip with its own probability. Translation is a fraction of the
/// image size, the crop scale is an area fraction, angles are degrees.
struct AugmentConfig {
    double crop_prob = 0.5;
    double affine_prob = 0.5;
    double rotate_prob = 0.5;
    double perspective_prob = 0.5;
    double crop_scale_min = 0.6;
    double crop_scale_max = 1.0;
    double max_translate = 0.1;
    double max_shear_deg = 10.0;
    double max_rotate_deg = 15.0;
    double perspective_distortion = 0.3;

    bool operator==(const AugmentConfig&) const = default;
};

void validate(const AugmentConfig& cfg);

/// Row-major 3x3 projective map; maps output pixel coordinates (x, y, 1) to
/// input coordinates. Pixel centers sit at integer coordinates, x along
/// columns and y along rows.
using Homography = std::array<double, 9>;

Homography identity_homography();

/// Solves the projective map sending each src corner to the matching dst
/// corner. Throws if the four correspondences are degenerate.
Homography solve_homography(const std::array<std::array<double, 2>, 4>& src,
                            const std::array<std::array<double, 2>, 4>& dst);

/// Samples img (shape [C,H,W]) at out_to_in-mapped coordinates with bilinear
/// interpolation, zero outside the image. Fractional coordinates within
/// 1e-12 of an integer snap to it, so inverses that are exact up to rounding
/// reproduce pixels exactly. Output values are clamped to [0, 1].
Tensor warp_bilinear(const Tensor& img, const Homography& out_to_in, int out_h, int out_w);

/// Deterministic cores of the four families.
Tensor crop_resize(const Tensor& img, int top, int left, int side);
Tensor affine_image(const Tensor& img, double translate_x, double translate_y,
                    double shear_deg);
Tensor rotate_image(const Tensor& img, double degrees);
/// moved_corners are the displaced positions of the image corners in the
/// output, ordered top-left, top-right, bottom-right, bottom-left, as (x, y).
Tensor perspective_image(const Tensor& img,
                         const std::array<std::array<double, 2>, 4>& moved_corners);

/// Each transform family fires on its own coin flip. Inputs must be [C,H,W]
/// images unless every probability is zero, in which case any shape passes
/// through untouched.
Tensor augment_image(const Tensor& img, const AugmentConfig& cfg, RngStream& rng);
Sample augment(const Sample& s, const AugmentConfig& cfg, RngStream& rng);

/// copies independently augmented duplicates of s, labels preserved.
std::vector<Sample> replicate(const Sample& s, int copies, const AugmentConfig& cfg,
                              RngStream& rng);

}  // namespace oneshot
