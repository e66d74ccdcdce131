#include <algorithm>
#include <string>

#include "binary_io.hpp"
#include "msmha/dataset.hpp"

namespace msmha {

namespace {
constexpr char kMagic[4] = {'M', 'S', 'G', 'V'};
}

std::size_t Dataset::stream_index(std::string_view tag) const {
    for (std::size_t i = 0; i < stream_tags.size(); ++i)
        if (stream_tags[i] == tag) return i;
    throw ArgumentError("dataset has no stream '" + std::string(tag) + "'");
}

void Dataset::validate() const {
    if (stream_tags.empty()) throw ValidationError("dataset has no streams");
    if (stream_tags.size() != frame_dims.size()) throw ValidationError("stream tag / frame dim count mismatch");
    if (sequence_length == 0) throw ValidationError("dataset sequence length is zero");
    for (const auto& tag : stream_tags)
        if (tag.empty() || tag.size() > 255) throw ValidationError("stream tag length must be 1-255 bytes");
    for (std::size_t f : frame_dims)
        if (f == 0) throw ValidationError("stream frame dim is zero");
    for (const GestureSample& s : samples) {
        if (s.streams.size() != stream_tags.size()) throw ValidationError("sample stream count mismatch");
        if (s.label >= class_count) {
            throw ValidationError("label " + std::to_string(s.label) + " outside [0, " + std::to_string(class_count) + ")");
        }
        for (std::size_t k = 0; k < s.streams.size(); ++k) {
            if (s.streams[k].shape() != Shape{sequence_length, frame_dims[k]}) {
                throw ValidationError("stream '" + stream_tags[k] + "' sample has shape " +
                                      shape_to_string(s.streams[k].shape()));
            }
        }
    }
}

Dataset Dataset::select_stream(std::string_view tag) const {
    const std::size_t k = stream_index(tag);
    Dataset out;
    out.stream_tags = {stream_tags[k]};
    out.frame_dims = {frame_dims[k]};
    out.sequence_length = sequence_length;
    out.class_count = class_count;
    out.samples.reserve(samples.size());
    for (const GestureSample& s : samples) out.samples.push_back({{s.streams[k]}, s.label});
    return out;
}

std::uint64_t dataset_file_size(const Dataset& dataset) {
    std::uint64_t header = 4 + 5 * 4;
    std::uint64_t per_sample = 4;
    for (std::size_t k = 0; k < dataset.stream_tags.size(); ++k) {
        header += 1 + dataset.stream_tags[k].size() + 4;
        per_sample += 4ull * dataset.sequence_length * dataset.frame_dims[k];
    }
    return header + per_sample * dataset.samples.size();
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    dataset.validate();
    io::ByteWriter w;
    w.raw(std::string(kMagic, 4));
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(dataset.samples.size()));
    w.u32(static_cast<std::uint32_t>(dataset.stream_tags.size()));
    w.u32(static_cast<std::uint32_t>(dataset.sequence_length));
    w.u32(static_cast<std::uint32_t>(dataset.class_count));
    for (std::size_t k = 0; k < dataset.stream_tags.size(); ++k) {
        w.u8(static_cast<std::uint8_t>(dataset.stream_tags[k].size()));
        w.raw(dataset.stream_tags[k]);
        w.u32(static_cast<std::uint32_t>(dataset.frame_dims[k]));
    }
    for (const GestureSample& s : dataset.samples) {
        w.u32(s.label);
        for (const Tensor<float>& stream : s.streams) w.f32s(stream.data());
    }
    w.save(path);
}

Dataset read_dataset(const std::filesystem::path& path) {
    io::ByteReader r(path);
    if (r.raw(4) != std::string(kMagic, 4)) {
        throw FormatError("'" + path.string() + "' is not a dataset file (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion) {
        throw FormatError("'" + path.string() + "' has unsupported version " + std::to_string(version));
    }
    Dataset d;
    const std::uint32_t sample_count = r.u32();
    const std::uint32_t stream_count = r.u32();
    d.sequence_length = r.u32();
    d.class_count = r.u32();
    if (stream_count == 0 || d.sequence_length == 0) throw FormatError("dataset header has zero streams or T = 0");
    for (std::uint32_t k = 0; k < stream_count; ++k) {
        const std::uint8_t len = r.u8();
        d.stream_tags.push_back(r.raw(len));
        d.frame_dims.push_back(r.u32());
        if (d.frame_dims.back() == 0) throw FormatError("dataset stream has F = 0");
    }
    d.samples.reserve(std::min<std::size_t>(sample_count, r.remaining() / 4));
    for (std::uint32_t i = 0; i < sample_count; ++i) {
        GestureSample s;
        s.label = r.u32();
        if (s.label >= d.class_count) throw FormatError("sample " + std::to_string(i) + " has out-of-range label");
        for (std::uint32_t k = 0; k < stream_count; ++k) {
            std::vector<float> values(d.sequence_length * d.frame_dims[k]);
            r.f32s(values);
            s.streams.push_back(Tensor<float>::create({d.sequence_length, d.frame_dims[k]}, std::move(values)));
        }
        d.samples.push_back(std::move(s));
    }
    if (r.remaining() != 0) {
        throw FormatError("'" + path.string() + "' has " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return d;
}

}  // namespace msmha
