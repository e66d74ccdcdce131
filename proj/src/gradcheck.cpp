#include "msmha/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "msmha/rng.hpp"
#include "msmha/train.hpp"

namespace msmha {

ModelConfig GradcheckConfig::tiny_model() {
    ModelConfig m;
    m.sequence_length = 4;
    m.input_frame_dim = 6;
    m.feature_width = 8;
    m.head_count = 2;
    m.stage_count = 2;
    m.class_count = 3;
    return m;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("max_relative_error: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

GradcheckReport run_gradcheck(const GradcheckConfig& config) {
    config.model.validate();
    if (config.seeds == 0) throw ConfigError("gradcheck needs at least one seed");
    const AttentionOptions options{.sabotage_scaling_grad = config.sabotage};
    GradcheckReport report;
    report.seeds = config.seeds;

    for (std::size_t k = 0; k < config.seeds; ++k) {
        const std::uint64_t seed = config.first_seed + k;
        ModelParams<double> params = init_model<double>(config.model, seed);
        // Perturb biases and gains away from their 0/1 initial values so
        // every parameter path is exercised.
        Rng rng(seed * 7919 + 17);
        for (auto& [name, tensor] : params.named())
            for (double& v : tensor->mutable_data()) v += 0.1 * rng.normal();

        std::vector<double> frame_values(config.model.sequence_length * config.model.input_frame_dim);
        for (double& v : frame_values) v = rng.normal();
        const Tensor<double> frames =
            Tensor<double>::create({config.model.sequence_length, config.model.input_frame_dim}, frame_values);
        const std::size_t label = seed % config.model.class_count;

        auto loss = [&] { return cross_entropy(classify(frames, params, config.model, options), label); };
        const std::vector<Tensor<double>> leaves = params.tensors();
        const GradientMap<double> analytic = backward(loss(), leaves);

        auto named = params.named();
        if (report.groups.empty())
            for (const auto& [name, tensor] : named) report.groups.push_back({name, tensor->numel(), 0.0});
        for (std::size_t g = 0; g < named.size(); ++g) {
            Tensor<double>& leaf = *named[g].second;
            const std::function<double()> f = [&] { return loss().item(); };
            const Tensor<double> numeric = finite_diff_grad(f, leaf, config.eps);
            const double err = max_relative_error(analytic.at(leaf).data(), numeric.data());
            report.groups[g].max_rel_error = std::max(report.groups[g].max_rel_error, err);
        }
    }
    for (const auto& g : report.groups) report.max_rel_error = std::max(report.max_rel_error, g.max_rel_error);
    report.passed = report.max_rel_error <= config.tolerance;
    return report;
}

}  // namespace msmha
