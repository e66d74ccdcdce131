#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "msmha/dataset.hpp"

namespace msmha {

struct SynthConfig {
    std::size_t class_count = 5;
    std::size_t sequence_length = 40;
    std::size_t frame_dim = 16;
    std::size_t stream_count = 1;
    std::size_t train_size = 200;
    std::size_t test_size = 100;
    double noise_sigma = 0.5;
    double correlation = 0.0;  // ρ: fraction of noise variance shared by all streams
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthSplit {
    Dataset train;
    Dataset test;
};

// Modality tag of stream k: color, depth, ir, normals, flow, then synthetic-k.
std::string stream_tag(std::size_t index);

// Noise-free class templates, indexed [stream][class], each [T×F].
std::vector<std::vector<Tensor<float>>> class_templates(const SynthConfig& config);

// Each class follows a sinusoidal latent trajectory over the T frames, with a
// class-indexed frequency and seeded phases, projected to F dims by a seeded
// Gaussian map per stream. Every stream adds noise of std noise_sigma, a ρ
// share of whose variance is common to all streams of a sample.
SynthSplit generate_dataset(const SynthConfig& config);

}  // namespace msmha
