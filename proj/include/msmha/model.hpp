#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msmha/attention.hpp"
#include "msmha/tensor.hpp"

namespace msmha {

struct ModelConfig {
    std::size_t feature_width = 512;   // D
    std::size_t head_count = 8;        // h
    std::size_t stage_count = 6;       // S
    std::size_t sequence_length = 40;  // T
    std::size_t class_count = 2;       // C
    std::size_t ffn_width = 0;         // 0 selects 4·D
    std::size_t input_frame_dim = 512; // F
    bool positional_encoding = true;

    std::size_t resolved_ffn_width() const { return ffn_width == 0 ? 4 * feature_width : ffn_width; }
    HeadSchedule schedule() const { return head_schedule(feature_width, head_count); }
    // Throws ConfigError on any invariant violation.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct EncoderStageParams {
    MsMhaParams<T> attention;
    Tensor<T> norm1_gain, norm1_bias;
    Tensor<T> norm2_gain, norm2_bias;
    Tensor<T> ffn_in_weight, ffn_in_bias;    // [D×ffn], [ffn]
    Tensor<T> ffn_out_weight, ffn_out_bias;  // [ffn×D], [D]
};

template <typename T>
struct ModelParams {
    Tensor<T> embed_weight, embed_bias;  // [F×D], [D]
    std::vector<EncoderStageParams<T>> stages;
    Tensor<T> readout_weight, readout_bias;  // [D×C], [C]

    // Every parameter tensor with a stable dotted name, in a fixed order.
    std::vector<std::pair<std::string, Tensor<T>*>> named();
    std::vector<std::pair<std::string, const Tensor<T>*>> named() const;
    std::vector<Tensor<T>> tensors() const;
    std::uint64_t parameter_count() const;
};

// Glorot-uniform weights, zero biases, unit layer-norm gains.
template <typename T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed);

// Throws ConfigError when any tensor shape disagrees with the config.
template <typename T>
void validate_model(const ModelParams<T>& params, const ModelConfig& config);

template <typename T>
Tensor<T> embed_frames(const Tensor<T>& frames, const Tensor<T>& weight, const Tensor<T>& bias);

// PE[t,2i] = sin(t/10000^(2i/D)), PE[t,2i+1] = cos(t/10000^(2i/D)).
template <typename T>
Tensor<T> positional_encoding(std::size_t length, std::size_t width);

// Pre-norm residual block:
//   X' = X + msmha(LN1(X));  out = X' + W2·gelu(W1·LN2(X') + b1) + b2
template <typename T>
Tensor<T> encoder_stage(const Tensor<T>& tokens, const EncoderStageParams<T>& params, const HeadSchedule& schedule,
                        const AttentionOptions& options = {});

// Unnormalized class scores [1×C].
template <typename T>
Tensor<T> classify_logits(const Tensor<T>& frames, const ModelParams<T>& params, const ModelConfig& config,
                          const AttentionOptions& options = {});

// Posterior [1×C]: embed → +PE → S stages → mean-pool → readout → softmax.
template <typename T>
Tensor<T> classify(const Tensor<T>& frames, const ModelParams<T>& params, const ModelConfig& config,
                   const AttentionOptions& options = {});

}  // namespace msmha
