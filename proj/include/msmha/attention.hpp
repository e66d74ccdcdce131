#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msmha/rng.hpp"
#include "msmha/tensor.hpp"

namespace msmha {

// Per-head attention widths. Pyramid schedules halve the width at every head
// starting from the full feature width; uniform schedules split it evenly
// (the conventional multi-head layout).
struct HeadSchedule {
    enum class Mode { pyramid, uniform };

    Mode mode = Mode::pyramid;
    std::size_t input_width = 0;
    std::vector<std::size_t> dims;

    std::size_t head_count() const { return dims.size(); }
    std::size_t total_width() const;
};

// [D, D/2, ..., D/2^(h-1)]. Throws ConfigError unless D is divisible by 2^(h-1).
HeadSchedule head_schedule(std::size_t feature_width, std::size_t head_count);
// [D/h] * h. Throws ConfigError unless D is divisible by h.
HeadSchedule uniform_schedule(std::size_t feature_width, std::size_t head_count);
// Throws ConfigError when the schedule breaks its mode's invariants.
void validate_schedule(const HeadSchedule& schedule);

template <typename T>
struct MsMhaParams {
    std::vector<Tensor<T>> query;  // [D×d_j]
    std::vector<Tensor<T>> key;    // [D×d_j]
    std::vector<Tensor<T>> value;  // [D×d_j]
    Tensor<T> output;              // [(Σd_j)×D]

    // Optional; empty / undefined when the block is bias-free.
    std::vector<Tensor<T>> query_bias;
    std::vector<Tensor<T>> key_bias;
    std::vector<Tensor<T>> value_bias;
    Tensor<T> output_bias;

    std::size_t head_count() const { return query.size(); }
    bool has_bias() const { return output_bias.defined(); }
    std::vector<Tensor<T>> tensors() const;
};

// Glorot-uniform projections, zero biases.
template <typename T>
MsMhaParams<T> init_msmha_params(const HeadSchedule& schedule, Rng& rng, bool with_bias = false);

// Throws ConfigError when the parameter shapes disagree with the schedule.
template <typename T>
void validate_params(const MsMhaParams<T>& params, const HeadSchedule& schedule);

struct AttentionOptions {
    // Negative control for the gradient check: the forward pass scales
    // scores by 1/√d but the backward pass applies 1/d.
    bool sabotage_scaling_grad = false;
};

// softmax(Q·Kᵀ/√d)·V with d = Q's width.
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               const AttentionOptions& options = {});

// Conventional multi-head attention; params must describe a uniform schedule.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const MsMhaParams<T>& params,
                               const AttentionOptions& options = {});

// Multiscaled multi-head attention: head j attends in a d_j-wide subspace and
// the concatenated heads are mapped back to width D by the output projection.
template <typename T>
Tensor<T> msmha(const Tensor<T>& x, const MsMhaParams<T>& params, const HeadSchedule& schedule,
                const AttentionOptions& options = {});

// Analytic parameter counts: 4·D·Σd_j (+ 3·Σd_j + D with biases).
std::uint64_t msmha_param_count(std::size_t feature_width, std::size_t head_count, bool include_bias = false);
std::uint64_t uniform_param_count(std::size_t feature_width, std::size_t head_count, bool include_bias = false);
std::uint64_t schedule_param_count(const HeadSchedule& schedule, bool include_bias = false);

// Multiply-accumulates of one forward pass over L tokens:
// projections 3·L·D·Σd, scores L²·Σd, weighted values L²·Σd, output L·Σd·D.
std::uint64_t attention_mac_count(const HeadSchedule& schedule, std::size_t sequence_length);

}  // namespace msmha
