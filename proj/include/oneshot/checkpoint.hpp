#pragma once

#include <map>
#include <string>

#include "oneshot/model.hpp"
#include "oneshot/optimizer.hpp"

namespace oneshot {

/// A flat container of named double arrays and named strings, written as a
/// little-endian binary file with an "OSDC" magic. Entries are stored in
/// name order, so writing what was read reproduces the file byte for byte.
struct Archive {
    std::map<std::string, Tensor> arrays;
    std::map<std::string, std::string> strings;
};

void write_archive(const std::string& path, const Archive& ar);
Archive read_archive(const std::string& path);

/// Serializes architecture, parameters and running statistics, plus the
/// optimizer state when one is passed.
void save_checkpoint(const std::string& path, const Model& model,
                     const AdamState* adam = nullptr);

struct Checkpoint {
    Model model;
    bool has_adam = false;
    AdamState adam;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace oneshot
