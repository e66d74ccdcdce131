#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msmha/checkpoint.hpp"
#include "msmha/dataset.hpp"
#include "msmha/model.hpp"
#include "msmha/synth.hpp"

namespace msmha {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    // input_frame_dim, sequence_length and class_count of 0 are filled in
    // from the training data.
    ModelConfig model;
    std::optional<SynthConfig> synth;  // used when `data` is empty
    std::string data;                  // dataset prefix: <data>-train.msgv, <data>-test.msgv
    std::string stream;                // stream tag to train on; empty selects the first

    double learning_rate = 1e-4;
    std::vector<std::size_t> decay_epochs{50, 75};
    double decay_factor = 0.1;
    AdamConfig adam;
    std::size_t epochs = 100;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> first_moment;
    std::vector<std::vector<T>> second_moment;
    std::uint64_t step = 0;
};

// -ln(max(posterior[label], 1e-12)); posterior is any tensor holding C probabilities.
inline constexpr double kLogClamp = 1e-12;
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& posterior, std::size_t label);

// Bias-corrected Adam, applied in place to the parameter leaves.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               double learning_rate, const AdamConfig& adam = {});

// learning_rate · decay_factor^#(decay epochs ≤ epoch); epochs are 1-based.
double lr_schedule(std::size_t epoch, const TrainConfig& config);

struct EpochMetrics {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochMetrics> history;
};

// Fills zero-valued model dimensions from the dataset and checks the rest.
ModelConfig resolve_model_config(const ModelConfig& model, const Dataset& data);

// Mini-batch cross-entropy training with Adam on one stream of `train`.
// Deterministic for a fixed config: sample order per epoch comes from a
// generator seeded by config.seed, and batch gradients are summed in order.
TrainResult train(const TrainConfig& config, const Dataset& train, const Dataset& test,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

// Convenience overload: loads or synthesizes the data named by the config.
TrainResult train(const TrainConfig& config, const std::function<void(const EpochMetrics&)>& on_epoch = {});

struct EvalResult {
    double accuracy = 0.0;
    std::size_t correct = 0;
    Dataset posteriors;  // tag "post", T = 1, F = C
};

// Classifies every sample of `stream` (empty: the checkpoint's training
// stream, else the first stream).
EvalResult evaluate(const Checkpoint& checkpoint, const Dataset& data, const std::string& stream = {});

// Argmax-lowest-index prediction over a float posterior.
std::size_t predict_label(std::span<const float> posterior);

// Loads <prefix>-train.msgv / <prefix>-test.msgv.
SynthSplit load_split(const std::string& prefix);
void save_split(const std::string& prefix, const SynthSplit& split);

}  // namespace msmha
