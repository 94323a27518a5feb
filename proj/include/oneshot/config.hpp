#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/dataset.hpp"
#include "oneshot/harness.hpp"

namespace oneshot {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Where samples come from: generated blobs, generated digits, or a pair of
/// IDX files on disk. The generator knobs live in `synthetic`; the digits
/// generator shares its per_class and seed.
struct DatasetConfig {
    std::string source = "synthetic";
    std::string images;
    std::string labels;
    SyntheticSpec synthetic;

    bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    DatasetConfig dataset;
    DomainSpec domains{2, 1, 0.7, 0.15};
    std::string arch = "small_cnn";
    std::vector<int> hidden = {4, 8, 16};
    BaseTrainConfig base;
    OneShotConfig adapt;
    SweepConfig sweep;
    TraceConfig trace;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses a JSON document into a config. Every key is optional and falls
/// back to its default; unknown keys and type mismatches are errors that
/// name the offending keys.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Range checks across all sections.
void validate(const ExperimentConfig& cfg);

std::vector<Sample> load_dataset(const DatasetConfig& cfg);

}  // namespace oneshot
