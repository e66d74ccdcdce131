#include "msmha/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "msmha/rng.hpp"

namespace msmha {

namespace {

constexpr std::size_t kLatentDims = 3;
// Per-element template standard deviation is roughly this value divided by √2.
constexpr double kTemplateAmplitude = 0.6;
constexpr std::uint64_t kTrainStream = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kTestStream = 0xc2b2ae3d27d4eb4full;

// Latent trajectories [C][T×K].
std::vector<std::vector<double>> latent_trajectories(const SynthConfig& cfg, Rng& rng) {
    std::vector<std::vector<double>> out(cfg.class_count);
    const double t_len = static_cast<double>(cfg.sequence_length);
    for (std::size_t c = 0; c < cfg.class_count; ++c) {
        const double freq = 0.5 * static_cast<double>(c + 1);
        std::array<double, kLatentDims> phase{};
        for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
        out[c].resize(cfg.sequence_length * kLatentDims);
        for (std::size_t t = 0; t < cfg.sequence_length; ++t)
            for (std::size_t k = 0; k < kLatentDims; ++k)
                out[c][t * kLatentDims + k] =
                    std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) / t_len + phase[k]);
    }
    return out;
}

std::vector<std::vector<std::vector<float>>> template_values(const SynthConfig& cfg) {
    Rng rng(cfg.seed);
    const auto latent = latent_trajectories(cfg, rng);
    const double proj_scale = kTemplateAmplitude / std::sqrt(static_cast<double>(kLatentDims));
    std::vector<std::vector<std::vector<float>>> out(cfg.stream_count);
    for (std::size_t s = 0; s < cfg.stream_count; ++s) {
        std::vector<double> proj(kLatentDims * cfg.frame_dim);
        for (double& p : proj) p = rng.normal() * proj_scale;
        out[s].resize(cfg.class_count);
        for (std::size_t c = 0; c < cfg.class_count; ++c) {
            auto& tmpl = out[s][c];
            tmpl.assign(cfg.sequence_length * cfg.frame_dim, 0.0f);
            for (std::size_t t = 0; t < cfg.sequence_length; ++t)
                for (std::size_t f = 0; f < cfg.frame_dim; ++f) {
                    double v = 0.0;
                    for (std::size_t k = 0; k < kLatentDims; ++k)
                        v += latent[c][t * kLatentDims + k] * proj[k * cfg.frame_dim + f];
                    tmpl[t * cfg.frame_dim + f] = static_cast<float>(v);
                }
        }
    }
    return out;
}

Dataset make_split(const SynthConfig& cfg, const std::vector<std::vector<std::vector<float>>>& templates,
                   std::size_t count, Rng& rng) {
    Dataset d;
    for (std::size_t s = 0; s < cfg.stream_count; ++s) {
        d.stream_tags.push_back(stream_tag(s));
        d.frame_dims.push_back(cfg.frame_dim);
    }
    d.sequence_length = cfg.sequence_length;
    d.class_count = cfg.class_count;

    // Balanced labels in a seeded order.
    std::vector<std::uint32_t> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<std::uint32_t>(i % cfg.class_count);
    for (std::size_t i = count; i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);

    const std::size_t n = cfg.sequence_length * cfg.frame_dim;
    const double shared_w = std::sqrt(cfg.correlation);
    const double own_w = std::sqrt(1.0 - cfg.correlation);
    std::vector<double> shared(n);
    for (std::size_t i = 0; i < count; ++i) {
        GestureSample sample;
        sample.label = labels[i];
        for (double& v : shared) v = rng.normal();
        for (std::size_t s = 0; s < cfg.stream_count; ++s) {
            const auto& tmpl = templates[s][sample.label];
            std::vector<float> values(n);
            for (std::size_t e = 0; e < n; ++e) {
                const double noise = shared_w * shared[e] + own_w * rng.normal();
                values[e] = static_cast<float>(tmpl[e] + cfg.noise_sigma * noise);
            }
            sample.streams.push_back(Tensor<float>::create({cfg.sequence_length, cfg.frame_dim}, std::move(values)));
        }
        d.samples.push_back(std::move(sample));
    }
    return d;
}

}  // namespace

void SynthConfig::validate() const {
    if (class_count < 2) throw ConfigError("synth: class_count must be at least 2");
    if (sequence_length < 1 || frame_dim < 1 || stream_count < 1) {
        throw ConfigError("synth: sequence_length, frame_dim and stream_count must be at least 1");
    }
    if (train_size < 1 || test_size < 1) throw ConfigError("synth: train_size and test_size must be at least 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("synth: noise_sigma must be >= 0");
    if (!(correlation >= 0.0 && correlation <= 1.0)) throw ConfigError("synth: correlation must lie in [0, 1]");
}

std::string stream_tag(std::size_t index) {
    static constexpr std::array<const char*, 5> kModalities{"color", "depth", "ir", "normals", "flow"};
    if (index < kModalities.size()) return kModalities[index];
    return "synthetic-" + std::to_string(index);
}

std::vector<std::vector<Tensor<float>>> class_templates(const SynthConfig& config) {
    config.validate();
    auto values = template_values(config);
    std::vector<std::vector<Tensor<float>>> out(config.stream_count);
    for (std::size_t s = 0; s < config.stream_count; ++s)
        for (auto& v : values[s])
            out[s].push_back(Tensor<float>::create({config.sequence_length, config.frame_dim}, std::move(v)));
    return out;
}

SynthSplit generate_dataset(const SynthConfig& config) {
    config.validate();
    const auto templates = template_values(config);
    Rng train_rng(config.seed ^ kTrainStream);
    Rng test_rng(config.seed ^ kTestStream);
    SynthSplit split;
    split.train = make_split(config, templates, config.train_size, train_rng);
    split.test = make_split(config, templates, config.test_size, test_rng);
    return split;
}

}  // namespace msmha
