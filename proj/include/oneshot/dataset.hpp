#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oneshot/tensor.hpp"

namespace oneshot {

/// Readers for the big-endian IDX container. Pixels are scaled to [0,1] and
/// each image becomes a [1,H,W] sample. Class labels are 1-based throughout
/// this codebase, so a stored byte label b becomes class b + 1.
Tensor load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
std::vector<Sample> load_idx_dataset(const std::string& images_path,
                                     const std::string& labels_path);

/// Writers for the same container; images must be [1,H,W] samples with
/// values in [0,1], stored as bytes (rounded). Labels are written as
/// class - 1.
void save_idx_images(const std::string& path, const std::vector<Sample>& samples);
void save_idx_labels(const std::string& path, const std::vector<Sample>& samples);

/// Gaussian-bump images. Class k gets a bump centered on a ring at angle
/// 2*pi*k/K; amplitude, per-sample amplitude jitter and pixel noise are
/// per-class knobs so domains can be made tight or diffuse. Values are
/// clamped to [0,1], labels run 1..K.
struct SyntheticSpec {
    int num_classes = 2;
    int per_class = 100;
    int image_size = 16;
    double blob_sigma = 0.12;
    double ring_radius = 0.28;
    double center_jitter = 0.04;
    std::vector<double> mean_scale;
    std::vector<double> noise_scale;
    std::vector<double> amp_jitter;
    std::uint64_t seed = 1;

    bool operator==(const SyntheticSpec&) const = default;
};

void validate(const SyntheticSpec& spec);
std::vector<Sample> gen_synthetic(const SyntheticSpec& spec);

/// Stroke-rendered 28x28 digits 0..9 with per-sample jitter and noise,
/// for running the full pipeline when no IDX files are available.
/// Labels are digit + 1. Deterministic in the seed.
std::vector<Sample> gen_digits(int per_class, std::uint64_t seed);

}  // namespace oneshot
