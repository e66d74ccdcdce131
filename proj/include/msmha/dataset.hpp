#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "msmha/tensor.hpp"

namespace msmha {

// One gesture: a [T×F_s] frame-feature sequence per stream plus its class.
struct GestureSample {
    std::vector<Tensor<float>> streams;  // aligned with Dataset::stream_tags
    std::uint32_t label = 0;
};

struct Dataset {
    std::vector<std::string> stream_tags;
    std::vector<std::size_t> frame_dims;  // F per stream
    std::size_t sequence_length = 0;      // T
    std::size_t class_count = 0;          // C
    std::vector<GestureSample> samples;

    std::size_t stream_index(std::string_view tag) const;
    // Throws ValidationError on any inconsistency between header and samples.
    void validate() const;
    // Keeps only the named stream.
    Dataset select_stream(std::string_view tag) const;
};

// Binary container ("MSGV", version 1, little-endian):
//   magic[4] u32 version u32 samples u32 streams u32 T u32 C
//   per stream: u8 tag_len, tag bytes, u32 F
//   per sample: u32 label, then per stream T·F f32 values (row-major)
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);
std::uint64_t dataset_file_size(const Dataset& dataset);

// Posterior files reuse the container: one stream tagged "post", T = 1, F = C.
inline constexpr std::string_view kPosteriorTag = "post";

}  // namespace msmha
