#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "msmha/model.hpp"

namespace msmha {

struct Checkpoint {
    ModelConfig config;
    ModelParams<float> params;
    // Free-form key/value annotations (e.g. the training stream tag).
    std::map<std::string, std::string> metadata;
};

// Layout: u32 manifest byte length, UTF-8 manifest text, raw little-endian f32
// payload. The manifest lists the config, metadata, and one
// "tensor <name> <d0,d1,..> <byte offset>" line per parameter.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace msmha
