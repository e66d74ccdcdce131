#include "msmha/checkpoint.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "binary_io.hpp"

namespace msmha {

namespace {

constexpr std::string_view kHeader = "msmha-checkpoint 1";

struct ManifestEntry {
    Shape shape;
    std::uint64_t offset = 0;
};

std::uint64_t parse_uint(std::string_view text, const std::string& what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError("checkpoint manifest: bad number '" + std::string(text) + "' for " + what);
    }
    return v;
}

Shape parse_shape(const std::string& text) {
    Shape shape;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t end = comma == std::string::npos ? text.size() : comma;
        shape.push_back(parse_uint(std::string_view(text).substr(start, end - start), "shape"));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return shape;
}

std::string format_shape(const Shape& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    validate_model(checkpoint.params, checkpoint.config);
    const ModelConfig& c = checkpoint.config;
    std::ostringstream manifest;
    manifest << kHeader << '\n';
    manifest << "config feature_width " << c.feature_width << '\n';
    manifest << "config head_count " << c.head_count << '\n';
    manifest << "config stage_count " << c.stage_count << '\n';
    manifest << "config sequence_length " << c.sequence_length << '\n';
    manifest << "config class_count " << c.class_count << '\n';
    manifest << "config ffn_width " << c.ffn_width << '\n';
    manifest << "config input_frame_dim " << c.input_frame_dim << '\n';
    manifest << "config positional_encoding " << (c.positional_encoding ? 1 : 0) << '\n';
    for (const auto& [key, value] : checkpoint.metadata) {
        if (key.empty() || key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
            throw ArgumentError("checkpoint metadata must be single-line with a space-free key");
        }
        manifest << "meta " << key << ' ' << value << '\n';
    }
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : checkpoint.params.named()) {
        manifest << "tensor " << name << ' ' << format_shape(tensor->shape()) << ' ' << offset << '\n';
        offset += 4ull * tensor->numel();
    }

    io::ByteWriter w;
    const std::string text = manifest.str();
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.raw(text);
    for (const auto& [name, tensor] : checkpoint.params.named()) w.f32s(tensor->data());
    w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    io::ByteReader r(path);
    const std::uint32_t manifest_len = r.u32();
    if (manifest_len > r.remaining()) throw FormatError("checkpoint manifest length exceeds file size");
    std::istringstream manifest(r.raw(manifest_len));

    std::string line;
    if (!std::getline(manifest, line) || line != kHeader) {
        throw FormatError("'" + path.string() + "' is not a checkpoint (bad header)");
    }

    Checkpoint ck;
    std::map<std::string, std::uint64_t> config_values;
    std::map<std::string, ManifestEntry> entries;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind, name;
        ls >> kind >> name;
        if (kind == "config") {
            std::string value;
            ls >> value;
            config_values[name] = parse_uint(value, name);
        } else if (kind == "meta") {
            std::string value;
            std::getline(ls >> std::ws, value);
            ck.metadata[name] = value;
        } else if (kind == "tensor") {
            std::string shape, offset;
            ls >> shape >> offset;
            if (!entries.emplace(name, ManifestEntry{parse_shape(shape), parse_uint(offset, name)}).second) {
                throw FormatError("checkpoint manifest lists '" + name + "' twice");
            }
        } else {
            throw FormatError("checkpoint manifest: unknown record '" + kind + "'");
        }
    }

    auto cfg = [&](const char* key) {
        auto it = config_values.find(key);
        if (it == config_values.end()) throw FormatError(std::string("checkpoint manifest lacks config ") + key);
        return static_cast<std::size_t>(it->second);
    };
    ck.config.feature_width = cfg("feature_width");
    ck.config.head_count = cfg("head_count");
    ck.config.stage_count = cfg("stage_count");
    ck.config.sequence_length = cfg("sequence_length");
    ck.config.class_count = cfg("class_count");
    ck.config.ffn_width = cfg("ffn_width");
    ck.config.input_frame_dim = cfg("input_frame_dim");
    ck.config.positional_encoding = cfg("positional_encoding") != 0;
    try {
        ck.config.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint config invalid: ") + e.what());
    }

    const std::size_t payload_begin = r.position();
    const std::uint64_t payload_len = r.remaining();
    ck.params = init_model<float>(ck.config, 0);
    auto slots = ck.params.named();

    std::uint64_t expected_len = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
    for (auto& [name, tensor] : slots) {
        auto it = entries.find(name);
        if (it == entries.end()) throw FormatError("checkpoint manifest is missing tensor '" + name + "'");
        if (it->second.shape != tensor->shape()) {
            throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_to_string(it->second.shape) +
                              ", config implies " + shape_to_string(tensor->shape()));
        }
        const std::uint64_t bytes = 4ull * tensor->numel();
        if (it->second.offset + bytes > payload_len) {
            throw FormatError("checkpoint tensor '" + name + "' lies outside the payload");
        }
        ranges.emplace_back(it->second.offset, it->second.offset + bytes);
        expected_len += bytes;
    }
    if (entries.size() != slots.size()) throw FormatError("checkpoint manifest lists unexpected tensors");
    if (expected_len != payload_len) {
        throw FormatError("checkpoint payload is " + std::to_string(payload_len) + " bytes, manifest implies " +
                          std::to_string(expected_len));
    }
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i)
        if (ranges[i].first < ranges[i - 1].second) throw FormatError("checkpoint tensors overlap in the payload");

    for (auto& [name, tensor] : slots) {
        std::vector<float> values(tensor->numel());
        r.seek(payload_begin + entries.at(name).offset);
        r.f32s(values);
        *tensor = Tensor<float>::create(tensor->shape(), std::move(values), true);
    }
    return ck;
}

}  // namespace msmha
