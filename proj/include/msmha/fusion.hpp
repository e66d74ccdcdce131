#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msmha/dataset.hpp"

namespace msmha {

// Class probabilities produced by one input stream's classifier.
struct ClassPosterior {
    std::string stream_id;
    std::vector<double> probs;
};

struct FusionResult {
    std::size_t label = 0;
    std::vector<double> score_sum;
    std::vector<ClassPosterior> per_stream;
};

struct FuseOptions {
    // Reject inputs whose probabilities do not sum to 1 within this slack.
    bool validate_normalization = true;
    double normalization_tolerance = 1e-4;
};

// Decision-level fusion: label = argmax_j Σ_i P(ω_j | x_i), ties to the lowest
// class index. Streams carry equal weight.
FusionResult late_fuse(std::span<const ClassPosterior> posteriors, const FuseOptions& options = {});

// Index of the largest entry, lowest index on ties.
std::size_t argmax_lowest(std::span<const double> values);

struct SubsetAccuracy {
    std::vector<std::string> streams;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

// Accuracy of late fusion for every non-empty subset of the given posterior
// sets, ordered by subset size and then by stream order. Sets must agree on
// sample count, labels and class count.
struct FusionReport {
    std::size_t sample_count = 0;
    std::vector<SubsetAccuracy> subsets;
};

inline constexpr std::size_t kMaxFusionStreams = 16;

FusionReport fuse_posterior_sets(const std::vector<Dataset>& posteriors, const std::vector<std::string>& names);

}  // namespace msmha
