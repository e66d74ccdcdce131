#include "msmha/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace msmha {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename V>
void read(const json& j, const char* key, V& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

SynthConfig synth_from_json(const json& j) {
    reject_unknown(j,
                   {"class_count", "sequence_length", "frame_dim", "stream_count", "train_size", "test_size",
                    "noise_sigma", "correlation", "seed"},
                   "synth");
    SynthConfig s;
    read(j, "class_count", s.class_count);
    read(j, "sequence_length", s.sequence_length);
    read(j, "frame_dim", s.frame_dim);
    read(j, "stream_count", s.stream_count);
    read(j, "train_size", s.train_size);
    read(j, "test_size", s.test_size);
    read(j, "noise_sigma", s.noise_sigma);
    read(j, "correlation", s.correlation);
    read(j, "seed", s.seed);
    s.validate();
    return s;
}

json parse(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

}  // namespace

TrainConfig parse_train_config(std::string_view json_text) {
    const json j = parse(json_text);
    reject_unknown(j,
                   {"model", "synth", "data", "stream", "learning_rate", "decay_epochs", "decay_factor", "adam_beta1",
                    "adam_beta2", "adam_eps", "epochs", "batch_size", "seed"},
                   "config");
    TrainConfig c;
    c.model.input_frame_dim = 0;
    c.model.sequence_length = 0;
    c.model.class_count = 0;
    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m,
                       {"feature_width", "head_count", "stage_count", "sequence_length", "class_count", "ffn_width",
                        "input_frame_dim", "positional_encoding"},
                       "model");
        read(m, "feature_width", c.model.feature_width);
        read(m, "head_count", c.model.head_count);
        read(m, "stage_count", c.model.stage_count);
        read(m, "sequence_length", c.model.sequence_length);
        read(m, "class_count", c.model.class_count);
        read(m, "ffn_width", c.model.ffn_width);
        read(m, "input_frame_dim", c.model.input_frame_dim);
        read(m, "positional_encoding", c.model.positional_encoding);
    }
    if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
    read(j, "data", c.data);
    read(j, "stream", c.stream);
    read(j, "learning_rate", c.learning_rate);
    read(j, "decay_epochs", c.decay_epochs);
    read(j, "decay_factor", c.decay_factor);
    read(j, "adam_beta1", c.adam.beta1);
    read(j, "adam_beta2", c.adam.beta2);
    read(j, "adam_eps", c.adam.eps);
    read(j, "epochs", c.epochs);
    read(j, "batch_size", c.batch_size);
    read(j, "seed", c.seed);
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_train_config(buffer.str());
}

SynthConfig parse_synth_config(std::string_view json_text) {
    return synth_from_json(parse(json_text));
}

}  // namespace msmha
