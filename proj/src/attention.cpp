#include "msmha/attention.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "msmha/init.hpp"

namespace msmha {

std::size_t HeadSchedule::total_width() const { return std::accumulate(dims.begin(), dims.end(), std::size_t{0}); }

HeadSchedule head_schedule(std::size_t feature_width, std::size_t head_count) {
    if (head_count == 0) throw ConfigError("head_schedule: head count must be at least 1");
    if (head_count > 63) throw ConfigError("head_schedule: head count " + std::to_string(head_count) + " too large");
    const std::size_t divisor = std::size_t{1} << (head_count - 1);
    if (feature_width == 0 || feature_width % divisor != 0) {
        throw ConfigError("head_schedule: feature width " + std::to_string(feature_width) +
                          " must be divisible by 2^(h-1) = " + std::to_string(divisor) + " for h = " +
                          std::to_string(head_count));
    }
    HeadSchedule s;
    s.mode = HeadSchedule::Mode::pyramid;
    s.input_width = feature_width;
    for (std::size_t j = 0; j < head_count; ++j) s.dims.push_back(feature_width >> j);
    return s;
}

HeadSchedule uniform_schedule(std::size_t feature_width, std::size_t head_count) {
    if (head_count == 0) throw ConfigError("uniform_schedule: head count must be at least 1");
    if (feature_width == 0 || feature_width % head_count != 0) {
        throw ConfigError("uniform_schedule: feature width " + std::to_string(feature_width) +
                          " must be divisible by h = " + std::to_string(head_count));
    }
    HeadSchedule s;
    s.mode = HeadSchedule::Mode::uniform;
    s.input_width = feature_width;
    s.dims.assign(head_count, feature_width / head_count);
    return s;
}

void validate_schedule(const HeadSchedule& schedule) {
    if (schedule.dims.empty()) throw ConfigError("schedule has no heads");
    const HeadSchedule expected = schedule.mode == HeadSchedule::Mode::pyramid
                                      ? head_schedule(schedule.input_width, schedule.head_count())
                                      : uniform_schedule(schedule.input_width, schedule.head_count());
    if (expected.dims != schedule.dims) throw ConfigError("schedule dims violate the declared mode");
}

template <typename T>
std::vector<Tensor<T>> MsMhaParams<T>::tensors() const {
    std::vector<Tensor<T>> out;
    for (std::size_t j = 0; j < head_count(); ++j) {
        out.push_back(query[j]);
        out.push_back(key[j]);
        out.push_back(value[j]);
    }
    out.push_back(output);
    if (has_bias()) {
        for (std::size_t j = 0; j < head_count(); ++j) {
            out.push_back(query_bias[j]);
            out.push_back(key_bias[j]);
            out.push_back(value_bias[j]);
        }
        out.push_back(output_bias);
    }
    return out;
}

template <typename T>
MsMhaParams<T> init_msmha_params(const HeadSchedule& schedule, Rng& rng, bool with_bias) {
    validate_schedule(schedule);
    const std::size_t d = schedule.input_width;
    MsMhaParams<T> p;
    for (std::size_t width : schedule.dims) {
        p.query.push_back(glorot_uniform<T>(d, width, rng));
        p.key.push_back(glorot_uniform<T>(d, width, rng));
        p.value.push_back(glorot_uniform<T>(d, width, rng));
    }
    p.output = glorot_uniform<T>(schedule.total_width(), d, rng);
    if (with_bias) {
        for (std::size_t width : schedule.dims) {
            p.query_bias.push_back(Tensor<T>::zeros({width}, true));
            p.key_bias.push_back(Tensor<T>::zeros({width}, true));
            p.value_bias.push_back(Tensor<T>::zeros({width}, true));
        }
        p.output_bias = Tensor<T>::zeros({d}, true);
    }
    return p;
}

template <typename T>
void validate_params(const MsMhaParams<T>& params, const HeadSchedule& schedule) {
    validate_schedule(schedule);
    const std::size_t h = schedule.head_count();
    const std::size_t d = schedule.input_width;
    if (params.query.size() != h || params.key.size() != h || params.value.size() != h) {
        throw ConfigError("attention params hold " + std::to_string(params.query.size()) + " heads, schedule has " +
                          std::to_string(h));
    }
    auto expect = [](const Tensor<T>& t, const Shape& shape, const char* what) {
        if (!t.defined() || t.shape() != shape) {
            throw ConfigError(std::string("attention ") + what + " has shape " +
                              (t.defined() ? shape_to_string(t.shape()) : "<none>") + ", expected " +
                              shape_to_string(shape));
        }
    };
    for (std::size_t j = 0; j < h; ++j) {
        expect(params.query[j], {d, schedule.dims[j]}, "query projection");
        expect(params.key[j], {d, schedule.dims[j]}, "key projection");
        expect(params.value[j], {d, schedule.dims[j]}, "value projection");
    }
    expect(params.output, {schedule.total_width(), d}, "output projection");
    if (params.has_bias()) {
        if (params.query_bias.size() != h || params.key_bias.size() != h || params.value_bias.size() != h) {
            throw ConfigError("attention bias count differs from head count");
        }
        for (std::size_t j = 0; j < h; ++j) {
            expect(params.query_bias[j], {schedule.dims[j]}, "query bias");
            expect(params.key_bias[j], {schedule.dims[j]}, "key bias");
            expect(params.value_bias[j], {schedule.dims[j]}, "value bias");
        }
        expect(params.output_bias, {d}, "output bias");
    }
}

namespace {

template <typename T>
Tensor<T> sabotaged_scale(const Tensor<T>& x, T forward_factor, T backward_factor) {
    std::vector<T> out(x.data().begin(), x.data().end());
    for (T& v : out) v *= forward_factor;
    return Tensor<T>::from_op(x.shape(), std::move(out), {x},
                              [backward_factor](std::span<const T> g, std::span<std::vector<T>* const> pg) {
                                  for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += backward_factor * g[i];
                              });
}

template <typename T>
Tensor<T> project(const Tensor<T>& x, const Tensor<T>& w, const std::vector<Tensor<T>>& biases, std::size_t j) {
    return biases.empty() ? linear(x, w) : linear(x, w, biases[j]);
}

// Shared by the uniform and multiscaled entry points so a uniform schedule
// follows the exact same arithmetic in both.
template <typename T>
Tensor<T> attend_heads(const Tensor<T>& x, const MsMhaParams<T>& params, const AttentionOptions& options) {
    std::vector<Tensor<T>> heads;
    heads.reserve(params.head_count());
    for (std::size_t j = 0; j < params.head_count(); ++j) {
        const Tensor<T> q = project(x, params.query[j], params.query_bias, j);
        const Tensor<T> k = project(x, params.key[j], params.key_bias, j);
        const Tensor<T> v = project(x, params.value[j], params.value_bias, j);
        heads.push_back(scaled_dot_attention(q, k, v, options));
    }
    const Tensor<T> joined = heads.size() == 1 ? heads.front() : concat_features(heads);
    return params.has_bias() ? linear(joined, params.output, params.output_bias) : linear(joined, params.output);
}

template <typename T>
void require_input(const Tensor<T>& x, std::size_t width) {
    if (x.rank() != 2 || x.cols() != width) {
        throw ShapeError("attention input " + shape_to_string(x.shape()) + " does not have width " +
                         std::to_string(width));
    }
}

}  // namespace

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               const AttentionOptions& options) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw ShapeError("scaled_dot_attention: rank-2 inputs required");
    if (q.cols() != k.cols()) {
        throw ShapeError("scaled_dot_attention: query width " + std::to_string(q.cols()) + " differs from key width " +
                         std::to_string(k.cols()));
    }
    if (k.rows() != v.rows()) {
        throw ShapeError("scaled_dot_attention: key rows " + std::to_string(k.rows()) + " differ from value rows " +
                         std::to_string(v.rows()));
    }
    const T width = static_cast<T>(q.cols());
    const T factor = T(1) / std::sqrt(width);
    const Tensor<T> scores = matmul_transposed(q, k);
    const Tensor<T> scaled =
        options.sabotage_scaling_grad ? sabotaged_scale(scores, factor, T(1) / width) : scale(scores, factor);
    return matmul(softmax_rows(scaled), v);
}

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const MsMhaParams<T>& params, const AttentionOptions& options) {
    if (params.head_count() == 0) throw ConfigError("multi_head_attention: no heads");
    const std::size_t d = params.query.front().rows();
    const HeadSchedule schedule = uniform_schedule(d, params.head_count());
    for (const auto& q : params.query) {
        if (q.cols() != schedule.dims.front()) {
            throw ConfigError("multi_head_attention: head widths are not uniform (expected " +
                              std::to_string(schedule.dims.front()) + ")");
        }
    }
    validate_params(params, schedule);
    require_input(x, d);
    return attend_heads(x, params, options);
}

template <typename T>
Tensor<T> msmha(const Tensor<T>& x, const MsMhaParams<T>& params, const HeadSchedule& schedule,
                const AttentionOptions& options) {
    validate_params(params, schedule);
    require_input(x, schedule.input_width);
    return attend_heads(x, params, options);
}

std::uint64_t schedule_param_count(const HeadSchedule& schedule, bool include_bias) {
    const std::uint64_t d = schedule.input_width;
    const std::uint64_t total = schedule.total_width();
    std::uint64_t count = 3 * d * total + total * d;
    if (include_bias) count += 3 * total + d;
    return count;
}

std::uint64_t msmha_param_count(std::size_t feature_width, std::size_t head_count, bool include_bias) {
    return schedule_param_count(head_schedule(feature_width, head_count), include_bias);
}

std::uint64_t uniform_param_count(std::size_t feature_width, std::size_t head_count, bool include_bias) {
    return schedule_param_count(uniform_schedule(feature_width, head_count), include_bias);
}

std::uint64_t attention_mac_count(const HeadSchedule& schedule, std::size_t sequence_length) {
    const std::uint64_t l = sequence_length;
    const std::uint64_t d = schedule.input_width;
    const std::uint64_t total = schedule.total_width();
    return 3 * l * d * total + 2 * l * l * total + l * total * d;
}

#define MSMHA_INSTANTIATE(T)                                                                                  \
    template struct MsMhaParams<T>;                                                                           \
    template MsMhaParams<T> init_msmha_params(const HeadSchedule&, Rng&, bool);                               \
    template void validate_params(const MsMhaParams<T>&, const HeadSchedule&);                                \
    template Tensor<T> scaled_dot_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                            const AttentionOptions&);                                         \
    template Tensor<T> multi_head_attention(const Tensor<T>&, const MsMhaParams<T>&, const AttentionOptions&); \
    template Tensor<T> msmha(const Tensor<T>&, const MsMhaParams<T>&, const HeadSchedule&, const AttentionOptions&);

MSMHA_INSTANTIATE(float)
MSMHA_INSTANTIATE(double)

#undef MSMHA_INSTANTIATE

}  // namespace msmha
