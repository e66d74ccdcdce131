#include "msmha/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msmha/fusion.hpp"
#include "msmha/rng.hpp"

namespace msmha {

namespace {
constexpr std::uint64_t kShuffleStream = 0x5851f42d4c957f2dull;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    for (std::size_t i = 1; i < decay_epochs.size(); ++i)
        if (decay_epochs[i] <= decay_epochs[i - 1]) throw ConfigError("decay_epochs must be strictly increasing");
    if (!(decay_factor > 0.0)) throw ConfigError("decay_factor must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
        throw ConfigError("adam betas must lie in [0, 1) and eps must be positive");
    }
    if (synth) synth->validate();
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& posterior, std::size_t label) {
    if (label >= posterior.numel()) {
        throw ArgumentError("cross_entropy: label " + std::to_string(label) + " outside " +
                            std::to_string(posterior.numel()) + " classes");
    }
    const T p = posterior.data()[label];
    const T clamp = static_cast<T>(kLogClamp);
    const bool clamped = !(p >= clamp);
    const T value = -std::log(clamped ? clamp : p);
    return Tensor<T>::from_op({1}, {value}, {posterior},
                              [label, p, clamped](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  if (!clamped) (*pg[0])[label] -= g[0] / p;
                              });
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               double learning_rate, const AdamConfig& adam) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: parameter / gradient count mismatch");
    if (state.first_moment.empty()) {
        for (const Tensor<T>& p : params) {
            state.first_moment.emplace_back(p.numel(), T(0));
            state.second_moment.emplace_back(p.numel(), T(0));
        }
    }
    if (state.first_moment.size() != params.size()) throw ShapeError("adam_step: state size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].shape() != params[i].shape() || state.first_moment[i].size() != params[i].numel()) {
            throw ShapeError("adam_step: gradient shape " + shape_to_string(grads[i].shape()) +
                             " differs from parameter shape " + shape_to_string(params[i].shape()));
        }
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(adam.beta1, t);
    const double correction2 = 1.0 - std::pow(adam.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].mutable_data();
        auto g = grads[i].data();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t e = 0; e < p.size(); ++e) {
            const double gd = g[e];
            const double md = adam.beta1 * m[e] + (1.0 - adam.beta1) * gd;
            const double vd = adam.beta2 * v[e] + (1.0 - adam.beta2) * gd * gd;
            m[e] = static_cast<T>(md);
            v[e] = static_cast<T>(vd);
            const double update = learning_rate * (md / correction1) / (std::sqrt(vd / correction2) + adam.eps);
            p[e] = static_cast<T>(static_cast<double>(p[e]) - update);
        }
    }
}

double lr_schedule(std::size_t epoch, const TrainConfig& config) {
    double lr = config.learning_rate;
    for (std::size_t boundary : config.decay_epochs)
        if (boundary <= epoch) lr *= config.decay_factor;
    return lr;
}

std::size_t predict_label(std::span<const float> posterior) {
    std::vector<double> wide(posterior.begin(), posterior.end());
    return argmax_lowest(wide);
}

ModelConfig resolve_model_config(const ModelConfig& model, const Dataset& data) {
    if (data.stream_tags.size() != 1) throw ArgumentError("resolve_model_config: expected a single-stream dataset");
    ModelConfig out = model;
    auto resolve = [](std::size_t& field, std::size_t actual, const char* name) {
        if (field == 0) {
            field = actual;
        } else if (field != actual) {
            throw ConfigError(std::string("model ") + name + " = " + std::to_string(field) + " but the dataset has " +
                              std::to_string(actual));
        }
    };
    resolve(out.input_frame_dim, data.frame_dims.front(), "input_frame_dim");
    resolve(out.sequence_length, data.sequence_length, "sequence_length");
    resolve(out.class_count, data.class_count, "class_count");
    out.validate();
    return out;
}

namespace {

std::string pick_stream(const std::string& requested, const Dataset& data) {
    if (!requested.empty()) {
        data.stream_index(requested);
        return requested;
    }
    if (data.stream_tags.empty()) throw ValidationError("dataset has no streams");
    return data.stream_tags.front();
}

double accuracy(const ModelParams<float>& params, const ModelConfig& config, const Dataset& data) {
    if (data.samples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const GestureSample& s : data.samples) {
        const Tensor<float> post = classify(s.streams.front(), params, config);
        if (predict_label(post.data()) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_data, const Dataset& test_data,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
    config.validate();
    train_data.validate();
    test_data.validate();
    if (train_data.samples.empty()) throw ValidationError("training set is empty");
    const std::string stream = pick_stream(config.stream, train_data);
    const Dataset train_set = train_data.select_stream(stream);
    const Dataset test_set = test_data.select_stream(stream);

    const ModelConfig model = resolve_model_config(config.model, train_set);
    resolve_model_config(model, test_set);

    TrainResult result;
    result.checkpoint.config = model;
    result.checkpoint.metadata["stream"] = stream;
    result.checkpoint.metadata["seed"] = std::to_string(config.seed);
    ModelParams<float>& params = result.checkpoint.params;
    params = init_model<float>(model, config.seed);

    std::vector<Tensor<float>> leaves = params.tensors();
    AdamState<float> adam;
    Rng shuffle_rng(config.seed ^ kShuffleStream);
    const std::size_t n = train_set.samples.size();
    std::vector<std::size_t> order(n);
    std::vector<std::vector<float>> grad_sum(leaves.size());

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = lr_schedule(epoch, config);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_total = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            for (std::size_t k = 0; k < leaves.size(); ++k) grad_sum[k].assign(leaves[k].numel(), 0.0f);
            for (std::size_t b = begin; b < end; ++b) {
                const GestureSample& s = train_set.samples[order[b]];
                const Tensor<float> loss = cross_entropy(classify(s.streams.front(), params, model), s.label);
                loss_total += loss.item();
                const GradientMap<float> grads = backward(loss, leaves);
                for (std::size_t k = 0; k < leaves.size(); ++k) {
                    auto g = grads.at(leaves[k]).data();
                    for (std::size_t e = 0; e < g.size(); ++e) grad_sum[k][e] += g[e];
                }
            }
            const float inv = 1.0f / static_cast<float>(end - begin);
            std::vector<Tensor<float>> batch_grads;
            batch_grads.reserve(leaves.size());
            for (std::size_t k = 0; k < leaves.size(); ++k) {
                std::vector<float> g = grad_sum[k];
                for (float& v : g) v *= inv;
                batch_grads.push_back(Tensor<float>::create(leaves[k].shape(), std::move(g)));
            }
            adam_step(leaves, batch_grads, adam, lr, config.adam);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.learning_rate = lr;
        m.train_loss = loss_total / static_cast<double>(n);
        m.train_accuracy = accuracy(params, model, train_set);
        m.test_accuracy = accuracy(params, model, test_set);
        result.history.push_back(m);
        if (on_epoch) on_epoch(m);
    }
    return result;
}

SynthSplit load_split(const std::string& prefix) {
    SynthSplit split;
    split.train = read_dataset(prefix + "-train.msgv");
    split.test = read_dataset(prefix + "-test.msgv");
    return split;
}

void save_split(const std::string& prefix, const SynthSplit& split) {
    write_dataset(prefix + "-train.msgv", split.train);
    write_dataset(prefix + "-test.msgv", split.test);
}

TrainResult train(const TrainConfig& config, const std::function<void(const EpochMetrics&)>& on_epoch) {
    config.validate();
    if (config.data.empty() && !config.synth) throw ConfigError("either a dataset path or a synth block is required");
    const SynthSplit split = config.data.empty() ? generate_dataset(*config.synth) : load_split(config.data);
    return train(config, split.train, split.test, on_epoch);
}

EvalResult evaluate(const Checkpoint& checkpoint, const Dataset& data, const std::string& stream) {
    data.validate();
    std::string tag = stream;
    if (tag.empty()) {
        auto it = checkpoint.metadata.find("stream");
        tag = (it != checkpoint.metadata.end() && std::find(data.stream_tags.begin(), data.stream_tags.end(),
                                                            it->second) != data.stream_tags.end())
                  ? it->second
                  : data.stream_tags.front();
    }
    const Dataset selected = data.select_stream(tag);
    const ModelConfig& config = checkpoint.config;
    if (selected.frame_dims.front() != config.input_frame_dim || selected.class_count != config.class_count) {
        throw ConfigError("checkpoint expects F = " + std::to_string(config.input_frame_dim) + ", C = " +
                          std::to_string(config.class_count) + " but stream '" + tag + "' has F = " +
                          std::to_string(selected.frame_dims.front()) + ", C = " +
                          std::to_string(selected.class_count));
    }
    validate_model(checkpoint.params, config);

    EvalResult result;
    result.posteriors.stream_tags = {std::string(kPosteriorTag)};
    result.posteriors.frame_dims = {config.class_count};
    result.posteriors.sequence_length = 1;
    result.posteriors.class_count = config.class_count;
    for (const GestureSample& s : selected.samples) {
        const Tensor<float> post = classify(s.streams.front(), checkpoint.params, config);
        if (predict_label(post.data()) == s.label) ++result.correct;
        std::vector<float> probs(post.data().begin(), post.data().end());
        result.posteriors.samples.push_back({{Tensor<float>::create({1, config.class_count}, std::move(probs))}, s.label});
    }
    result.accuracy = selected.samples.empty()
                          ? 0.0
                          : static_cast<double>(result.correct) / static_cast<double>(selected.samples.size());
    return result;
}

template Tensor<float> cross_entropy(const Tensor<float>&, std::size_t);
template Tensor<double> cross_entropy(const Tensor<double>&, std::size_t);
template void adam_step(std::vector<Tensor<float>>&, const std::vector<Tensor<float>>&, AdamState<float>&, double,
                        const AdamConfig&);
template void adam_step(std::vector<Tensor<double>>&, const std::vector<Tensor<double>>&, AdamState<double>&, double,
                        const AdamConfig&);

}  // namespace msmha
