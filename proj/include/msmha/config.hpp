#pragma once

#include <filesystem>
#include <string_view>

#include "msmha/train.hpp"

namespace msmha {

// JSON layout (every key optional):
// {
//   "model": {"feature_width", "head_count", "stage_count", "sequence_length",
//             "class_count", "ffn_width", "input_frame_dim", "positional_encoding"},
//   "synth": {"class_count", "sequence_length", "frame_dim", "stream_count",
//             "train_size", "test_size", "noise_sigma", "correlation", "seed"},
//   "data", "stream", "learning_rate", "decay_epochs", "decay_factor",
//   "adam_beta1", "adam_beta2", "adam_eps", "epochs", "batch_size", "seed"
// }
// Model input_frame_dim / sequence_length / class_count default to 0 (taken
// from the data). Unknown keys are rejected with ConfigError.
TrainConfig parse_train_config(std::string_view json_text);
TrainConfig load_train_config(const std::filesystem::path& path);

SynthConfig parse_synth_config(std::string_view json_text);

}  // namespace msmha
