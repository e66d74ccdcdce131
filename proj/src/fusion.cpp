#include "msmha/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <string>

#include "msmha/errors.hpp"

namespace msmha {

std::size_t argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j)
        if (values[j] > values[best]) best = j;
    return best;
}

FusionResult late_fuse(std::span<const ClassPosterior> posteriors, const FuseOptions& options) {
    if (posteriors.empty()) throw ArgumentError("late_fuse: at least one stream is required");
    const std::size_t classes = posteriors.front().probs.size();
    if (classes == 0) throw ShapeError("late_fuse: empty posterior");
    FusionResult result;
    result.score_sum.assign(classes, 0.0);
    for (const ClassPosterior& p : posteriors) {
        if (p.probs.size() != classes) {
            throw ShapeError("late_fuse: stream '" + p.stream_id + "' has " + std::to_string(p.probs.size()) +
                             " classes, expected " + std::to_string(classes));
        }
        if (options.validate_normalization) {
            double total = 0.0;
            for (double v : p.probs) {
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw ValidationError("late_fuse: stream '" + p.stream_id + "' has a negative or non-finite score");
                }
                total += v;
            }
            if (std::abs(total - 1.0) > options.normalization_tolerance) {
                throw ValidationError("late_fuse: stream '" + p.stream_id + "' sums to " + std::to_string(total));
            }
        }
    }
    // Summands are sorted per class so the sum is independent of stream order.
    std::vector<double> column(posteriors.size());
    for (std::size_t j = 0; j < classes; ++j) {
        for (std::size_t i = 0; i < posteriors.size(); ++i) column[i] = posteriors[i].probs[j];
        std::sort(column.begin(), column.end());
        for (double v : column) result.score_sum[j] += v;
    }
    result.label = argmax_lowest(result.score_sum);
    result.per_stream.assign(posteriors.begin(), posteriors.end());
    return result;
}

FusionReport fuse_posterior_sets(const std::vector<Dataset>& posteriors, const std::vector<std::string>& names) {
    if (posteriors.empty()) throw ArgumentError("fuse: at least one posterior set is required");
    if (posteriors.size() != names.size()) throw ArgumentError("fuse: one name per posterior set is required");
    if (posteriors.size() > kMaxFusionStreams) {
        throw ArgumentError("fuse: at most " + std::to_string(kMaxFusionStreams) + " streams are supported");
    }
    const Dataset& first = posteriors.front();
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        const Dataset& d = posteriors[i];
        d.validate();
        if (d.stream_tags.size() != 1 || d.sequence_length != 1 || d.frame_dims.front() != d.class_count) {
            throw ValidationError("fuse: '" + names[i] + "' is not a posterior set (expected one stream, T = 1, F = C)");
        }
        if (d.class_count != first.class_count || d.samples.size() != first.samples.size()) {
            throw ValidationError("fuse: '" + names[i] + "' differs from '" + names[0] +
                                  "' in class count or sample count");
        }
        for (std::size_t s = 0; s < d.samples.size(); ++s) {
            if (d.samples[s].label != first.samples[s].label) {
                throw ValidationError("fuse: label of sample " + std::to_string(s) + " in '" + names[i] +
                                      "' differs from '" + names[0] + "'");
            }
        }
    }

    const std::size_t m = posteriors.size();
    std::vector<std::uint32_t> masks;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) masks.push_back(mask);
    std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        if (pa != pb) return pa < pb;
        // Lower stream indices first: compare bit-reversed masks.
        for (std::size_t k = 0; k < 32; ++k) {
            const bool ha = (a >> k) & 1u, hb = (b >> k) & 1u;
            if (ha != hb) return ha;
        }
        return false;
    });

    FusionReport report;
    report.sample_count = first.samples.size();
    std::vector<ClassPosterior> streams;
    for (std::uint32_t mask : masks) {
        SubsetAccuracy row;
        for (std::size_t k = 0; k < m; ++k)
            if (mask & (1u << k)) row.streams.push_back(names[k]);
        for (std::size_t s = 0; s < report.sample_count; ++s) {
            streams.clear();
            for (std::size_t k = 0; k < m; ++k) {
                if (!(mask & (1u << k))) continue;
                auto values = posteriors[k].samples[s].streams.front().data();
                streams.push_back({names[k], std::vector<double>(values.begin(), values.end())});
            }
            if (late_fuse(streams).label == first.samples[s].label) ++row.correct;
        }
        row.accuracy = report.sample_count == 0
                           ? 0.0
                           : static_cast<double>(row.correct) / static_cast<double>(report.sample_count);
        report.subsets.push_back(std::move(row));
    }
    return report;
}

}  // namespace msmha
