#include "msmha/model.hpp"

#include <cmath>
#include <string>

#include "msmha/init.hpp"

namespace msmha {

void ModelConfig::validate() const {
    head_schedule(feature_width, head_count);
    if (stage_count < 1) throw ConfigError("stage_count must be at least 1");
    if (sequence_length < 1) throw ConfigError("sequence_length must be at least 1");
    if (class_count < 2) throw ConfigError("class_count must be at least 2");
    if (input_frame_dim < 1) throw ConfigError("input_frame_dim must be at least 1");
    if (feature_width < 2) throw ConfigError("feature_width must be at least 2");
    if (positional_encoding && feature_width % 2 != 0) {
        throw ConfigError("positional encoding needs an even feature_width, got " + std::to_string(feature_width));
    }
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> ModelParams<T>::named() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    out.emplace_back("embed.weight", &embed_weight);
    out.emplace_back("embed.bias", &embed_bias);
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const std::string p = "stage" + std::to_string(s) + ".";
        auto& st = stages[s];
        for (std::size_t j = 0; j < st.attention.head_count(); ++j) {
            const std::string h = std::to_string(j);
            out.emplace_back(p + "attn.query" + h, &st.attention.query[j]);
            out.emplace_back(p + "attn.key" + h, &st.attention.key[j]);
            out.emplace_back(p + "attn.value" + h, &st.attention.value[j]);
        }
        out.emplace_back(p + "attn.output", &st.attention.output);
        out.emplace_back(p + "norm1.gain", &st.norm1_gain);
        out.emplace_back(p + "norm1.bias", &st.norm1_bias);
        out.emplace_back(p + "norm2.gain", &st.norm2_gain);
        out.emplace_back(p + "norm2.bias", &st.norm2_bias);
        out.emplace_back(p + "ffn.in.weight", &st.ffn_in_weight);
        out.emplace_back(p + "ffn.in.bias", &st.ffn_in_bias);
        out.emplace_back(p + "ffn.out.weight", &st.ffn_out_weight);
        out.emplace_back(p + "ffn.out.bias", &st.ffn_out_bias);
    }
    out.emplace_back("readout.weight", &readout_weight);
    out.emplace_back("readout.bias", &readout_bias);
    return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> ModelParams<T>::named() const {
    auto mutable_view = const_cast<ModelParams*>(this)->named();
    return {mutable_view.begin(), mutable_view.end()};
}

template <typename T>
std::vector<Tensor<T>> ModelParams<T>::tensors() const {
    std::vector<Tensor<T>> out;
    for (const auto& [name, t] : named()) out.push_back(*t);
    return out;
}

template <typename T>
std::uint64_t ModelParams<T>::parameter_count() const {
    std::uint64_t n = 0;
    for (const auto& [name, t] : named()) n += t->numel();
    return n;
}

template <typename T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const std::size_t d = config.feature_width;
    const std::size_t ffn = config.resolved_ffn_width();
    const HeadSchedule schedule = config.schedule();
    ModelParams<T> p;
    p.embed_weight = glorot_uniform<T>(config.input_frame_dim, d, rng);
    p.embed_bias = Tensor<T>::zeros({d}, true);
    for (std::size_t s = 0; s < config.stage_count; ++s) {
        EncoderStageParams<T> st;
        st.attention = init_msmha_params<T>(schedule, rng);
        st.norm1_gain = Tensor<T>::full({d}, T(1), true);
        st.norm1_bias = Tensor<T>::zeros({d}, true);
        st.norm2_gain = Tensor<T>::full({d}, T(1), true);
        st.norm2_bias = Tensor<T>::zeros({d}, true);
        st.ffn_in_weight = glorot_uniform<T>(d, ffn, rng);
        st.ffn_in_bias = Tensor<T>::zeros({ffn}, true);
        st.ffn_out_weight = glorot_uniform<T>(ffn, d, rng);
        st.ffn_out_bias = Tensor<T>::zeros({d}, true);
        p.stages.push_back(std::move(st));
    }
    p.readout_weight = glorot_uniform<T>(d, config.class_count, rng);
    p.readout_bias = Tensor<T>::zeros({config.class_count}, true);
    return p;
}

template <typename T>
void validate_model(const ModelParams<T>& params, const ModelConfig& config) {
    config.validate();
    const std::size_t d = config.feature_width;
    const std::size_t ffn = config.resolved_ffn_width();
    auto expect = [](const Tensor<T>& t, const Shape& shape, const std::string& what) {
        if (!t.defined() || t.shape() != shape) {
            throw ConfigError(what + " has shape " + (t.defined() ? shape_to_string(t.shape()) : "<none>") +
                              ", expected " + shape_to_string(shape));
        }
    };
    expect(params.embed_weight, {config.input_frame_dim, d}, "embed.weight");
    expect(params.embed_bias, {d}, "embed.bias");
    if (params.stages.size() != config.stage_count) {
        throw ConfigError("model holds " + std::to_string(params.stages.size()) + " stages, config expects " +
                          std::to_string(config.stage_count));
    }
    const HeadSchedule schedule = config.schedule();
    for (const auto& st : params.stages) {
        validate_params(st.attention, schedule);
        expect(st.norm1_gain, {d}, "norm1.gain");
        expect(st.norm1_bias, {d}, "norm1.bias");
        expect(st.norm2_gain, {d}, "norm2.gain");
        expect(st.norm2_bias, {d}, "norm2.bias");
        expect(st.ffn_in_weight, {d, ffn}, "ffn.in.weight");
        expect(st.ffn_in_bias, {ffn}, "ffn.in.bias");
        expect(st.ffn_out_weight, {ffn, d}, "ffn.out.weight");
        expect(st.ffn_out_bias, {d}, "ffn.out.bias");
    }
    expect(params.readout_weight, {d, config.class_count}, "readout.weight");
    expect(params.readout_bias, {config.class_count}, "readout.bias");
}

template <typename T>
Tensor<T> embed_frames(const Tensor<T>& frames, const Tensor<T>& weight, const Tensor<T>& bias) {
    return linear(frames, weight, bias);
}

template <typename T>
Tensor<T> positional_encoding(std::size_t length, std::size_t width) {
    if (width == 0 || width % 2 != 0) {
        throw ConfigError("positional_encoding: width must be even, got " + std::to_string(width));
    }
    if (length == 0) throw ConfigError("positional_encoding: length must be positive");
    std::vector<T> pe(length * width);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t i = 0; i < width / 2; ++i) {
            const double angle =
                static_cast<double>(t) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(width));
            pe[t * width + 2 * i] = static_cast<T>(std::sin(angle));
            pe[t * width + 2 * i + 1] = static_cast<T>(std::cos(angle));
        }
    }
    return Tensor<T>::create({length, width}, std::move(pe));
}

template <typename T>
Tensor<T> encoder_stage(const Tensor<T>& tokens, const EncoderStageParams<T>& params, const HeadSchedule& schedule,
                        const AttentionOptions& options) {
    const Tensor<T> attended = msmha(layer_norm(tokens, params.norm1_gain, params.norm1_bias), params.attention,
                                     schedule, options);
    const Tensor<T> mid = add(tokens, attended);
    const Tensor<T> hidden =
        gelu(linear(layer_norm(mid, params.norm2_gain, params.norm2_bias), params.ffn_in_weight, params.ffn_in_bias));
    return add(mid, linear(hidden, params.ffn_out_weight, params.ffn_out_bias));
}

template <typename T>
Tensor<T> classify_logits(const Tensor<T>& frames, const ModelParams<T>& params, const ModelConfig& config,
                          const AttentionOptions& options) {
    if (frames.rank() != 2 || frames.rows() != config.sequence_length || frames.cols() != config.input_frame_dim) {
        throw ShapeError("classify: frames " + shape_to_string(frames.shape()) + " are not [T×F] = [" +
                         std::to_string(config.sequence_length) + "x" + std::to_string(config.input_frame_dim) + "]");
    }
    if (params.stages.size() != config.stage_count) throw ConfigError("classify: stage count mismatch");
    const HeadSchedule schedule = config.schedule();
    Tensor<T> tokens = embed_frames(frames, params.embed_weight, params.embed_bias);
    if (config.positional_encoding) {
        tokens = add(tokens, positional_encoding<T>(frames.rows(), config.feature_width));
    }
    for (const auto& stage : params.stages) tokens = encoder_stage(tokens, stage, schedule, options);
    return linear(mean_rows(tokens), params.readout_weight, params.readout_bias);
}

template <typename T>
Tensor<T> classify(const Tensor<T>& frames, const ModelParams<T>& params, const ModelConfig& config,
                   const AttentionOptions& options) {
    return softmax_rows(classify_logits(frames, params, config, options));
}

#define MSMHA_INSTANTIATE(T)                                                                                     \
    template struct ModelParams<T>;                                                                              \
    template ModelParams<T> init_model(const ModelConfig&, std::uint64_t);                                       \
    template void validate_model(const ModelParams<T>&, const ModelConfig&);                                     \
    template Tensor<T> embed_frames(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                       \
    template Tensor<T> positional_encoding(std::size_t, std::size_t);                                            \
    template Tensor<T> encoder_stage(const Tensor<T>&, const EncoderStageParams<T>&, const HeadSchedule&,        \
                                     const AttentionOptions&);                                                   \
    template Tensor<T> classify_logits(const Tensor<T>&, const ModelParams<T>&, const ModelConfig&,              \
                                       const AttentionOptions&);                                                 \
    template Tensor<T> classify(const Tensor<T>&, const ModelParams<T>&, const ModelConfig&, const AttentionOptions&);

MSMHA_INSTANTIATE(float)
MSMHA_INSTANTIATE(double)

#undef MSMHA_INSTANTIATE

}  // namespace msmha
