#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "msmha/bench.hpp"
#include "msmha/config.hpp"
#include "msmha/fusion.hpp"
#include "msmha/gradcheck.hpp"
#include "msmha/train.hpp"

using namespace msmha;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_run() {
    TrainConfig c;
    c.model.feature_width = 8;
    c.model.head_count = 2;
    c.model.stage_count = 1;
    c.model.sequence_length = 0;
    c.model.class_count = 0;
    c.model.input_frame_dim = 0;
    SynthConfig s;
    s.class_count = 3;
    s.sequence_length = 4;
    s.frame_dim = 6;
    s.train_size = 30;
    s.test_size = 12;
    c.synth = s;
    c.learning_rate = 1e-2;
    c.epochs = 3;
    c.batch_size = 4;
    c.seed = 5;
    return c;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(CrossEntropy, Examples) {
    using T64 = Tensor<double>;
    EXPECT_NEAR(cross_entropy(T64::full({1, 4}, 0.25), 2).item(), std::log(4.0), 1e-12);
    EXPECT_NEAR(std::log(4.0), 1.3863, 1e-4);
    EXPECT_EQ(cross_entropy(T64::create({1, 3}, {0, 1, 0}), 1).item(), 0.0);
    const double clamped = cross_entropy(T64::create({1, 2}, {1, 0}), 1).item();
    EXPECT_TRUE(std::isfinite(clamped));
    EXPECT_NEAR(clamped, std::log(1e12), 1e-9);
    EXPECT_NEAR(clamped, 27.63, 1e-2);
    EXPECT_THROW(cross_entropy(T64::full({1, 3}, 1.0 / 3), 3), ArgumentError);
}

TEST(CrossEntropy, NonNegativeAndGradient) {
    using T64 = Tensor<double>;
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(4);
        double z = 0.0;
        for (double& v : p) z += (v = rng.uniform() + 0.01);
        for (double& v : p) v /= z;
        const T64 post = T64::create({1, 4}, p, true);
        const std::size_t label = rng.below(4);
        const T64 loss = cross_entropy(post, label);
        EXPECT_GE(loss.item(), 0.0);
        const auto g = backward(loss, std::vector<T64>{post});
        const T64 numeric =
            finite_diff_grad<double>([&](const T64& x) { return cross_entropy(x, label).item(); }, post, 1e-7);
        EXPECT_LE(max_relative_error(g.at(post).data(), numeric.data()), 1e-4);
    }
}

TEST(Adam, ZeroGradientLeavesParameters) {
    std::vector<Tensor<double>> params{Tensor<double>::create({2}, {1.5, -2.0}, true)};
    const std::vector<Tensor<double>> grads{Tensor<double>::zeros({2})};
    AdamState<double> state;
    adam_step(params, grads, state, 0.1);
    EXPECT_EQ(state.step, 1u);
    EXPECT_EQ(params[0].at(0), 1.5);
    EXPECT_EQ(params[0].at(1), -2.0);
    EXPECT_EQ(state.first_moment[0].size(), 2u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    for (double g : {1e-3, 0.5, -7.0, 300.0}) {
        std::vector<Tensor<double>> params{Tensor<double>::create({1}, {0.0}, true)};
        AdamState<double> state;
        adam_step(params, {Tensor<double>::create({1}, {g})}, state, 1e-3);
        EXPECT_NEAR(params[0].item(), g > 0 ? -1e-3 : 1e-3, 1e-8) << g;
    }
}

TEST(Adam, DescendsQuadratic) {
    std::vector<Tensor<double>> params{Tensor<double>::create({1}, {1.0}, true)};
    AdamState<double> state;
    for (int i = 0; i < 100; ++i) {
        const double x = params[0].item();
        adam_step(params, {Tensor<double>::create({1}, {2.0 * x})}, state, 0.1);
    }
    EXPECT_LT(std::abs(params[0].item()), 0.1);
}

TEST(Adam, ShapeMismatch) {
    std::vector<Tensor<double>> params{Tensor<double>::zeros({2}, true)};
    AdamState<double> state;
    EXPECT_THROW(adam_step(params, {Tensor<double>::zeros({3})}, state, 0.1), ShapeError);
    EXPECT_THROW(adam_step(params, {}, state, 0.1), ShapeError);
}

TEST(LrSchedule, Examples) {
    TrainConfig c;
    EXPECT_DOUBLE_EQ(lr_schedule(1, c), 1e-4);
    EXPECT_DOUBLE_EQ(lr_schedule(49, c), 1e-4);
    EXPECT_NEAR(lr_schedule(50, c), 1e-5, 1e-18);
    EXPECT_NEAR(lr_schedule(75, c), 1e-6, 1e-19);
    double previous = lr_schedule(0, c);
    for (std::size_t e = 1; e <= 120; ++e) {
        EXPECT_LE(lr_schedule(e, c), previous);
        previous = lr_schedule(e, c);
    }
    c.decay_epochs.clear();
    for (std::size_t e : {1, 50, 75, 1000}) EXPECT_DOUBLE_EQ(lr_schedule(e, c), 1e-4);
}

TEST(TrainConfig, Validation) {
    TrainConfig c = tiny_run();
    c.epochs = 0;
    EXPECT_THROW(train(c), ConfigError);
    c = tiny_run();
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny_run();
    c.decay_epochs = {75, 50};
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny_run();
    c.synth.reset();
    EXPECT_THROW(train(c), ConfigError);
}

TEST(TrainConfig, ModelMismatchIsConfigError) {
    TrainConfig c = tiny_run();
    c.model.input_frame_dim = 7;
    EXPECT_THROW(train(c), ConfigError);
}

TEST(Train, DeterministicMetricsAndCheckpoint) {
    const TrainResult a = train(tiny_run());
    const TrainResult b = train(tiny_run());
    ASSERT_EQ(a.history.size(), 3u);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        EXPECT_EQ(std::memcmp(&a.history[i].train_loss, &b.history[i].train_loss, sizeof(double)), 0);
        EXPECT_EQ(a.history[i].train_accuracy, b.history[i].train_accuracy);
        EXPECT_EQ(a.history[i].test_accuracy, b.history[i].test_accuracy);
        EXPECT_EQ(a.history[i].epoch, i + 1);
    }
    const fs::path dir = fs::temp_directory_path() / "msmha_test_train";
    fs::create_directories(dir);
    save_checkpoint(dir / "a.ckpt", a.checkpoint);
    save_checkpoint(dir / "b.ckpt", b.checkpoint);
    EXPECT_EQ(file_bytes(dir / "a.ckpt"), file_bytes(dir / "b.ckpt"));
    EXPECT_EQ(a.checkpoint.metadata.at("stream"), "color");

    TrainConfig other = tiny_run();
    other.seed = 6;
    EXPECT_NE(train(other).history.back().train_loss, a.history.back().train_loss);
}

TEST(Evaluate, ReproducesLoggedAccuracyAndPosteriors) {
    const TrainConfig cfg = tiny_run();
    const SynthSplit split = generate_dataset(*cfg.synth);
    const TrainResult r = train(cfg, split.train, split.test);
    const EvalResult on_train = evaluate(r.checkpoint, split.train);
    EXPECT_EQ(on_train.accuracy, r.history.back().train_accuracy);
    const EvalResult on_test = evaluate(r.checkpoint, split.test);
    EXPECT_EQ(on_test.accuracy, r.history.back().test_accuracy);

    const Dataset& post = on_test.posteriors;
    EXPECT_EQ(post.stream_tags, std::vector<std::string>{"post"});
    EXPECT_EQ(post.sequence_length, 1u);
    EXPECT_EQ(post.frame_dims.front(), 3u);
    ASSERT_EQ(post.samples.size(), split.test.samples.size());
    for (const auto& s : post.samples) {
        double total = 0.0;
        for (float v : s.streams.front().data()) total += v;
        EXPECT_NEAR(total, 1.0, 1e-6);
    }

    // Fusing the single posterior set reproduces the evaluation accuracy.
    const FusionReport fused = fuse_posterior_sets({post}, {"color"});
    EXPECT_EQ(fused.subsets.front().accuracy, on_test.accuracy);
}

TEST(Evaluate, SampleOrderDoesNotMatter) {
    const TrainConfig cfg = tiny_run();
    const SynthSplit split = generate_dataset(*cfg.synth);
    const TrainResult r = train(cfg, split.train, split.test);
    Dataset shuffled = split.test;
    Rng rng(99);
    for (std::size_t i = shuffled.samples.size(); i > 1; --i)
        std::swap(shuffled.samples[i - 1], shuffled.samples[rng.below(i)]);
    EXPECT_EQ(evaluate(r.checkpoint, shuffled).accuracy, evaluate(r.checkpoint, split.test).accuracy);
}

TEST(Evaluate, DimensionMismatchIsConfigError) {
    const TrainConfig cfg = tiny_run();
    const TrainResult r = train(cfg);
    SynthConfig wider = *cfg.synth;
    wider.frame_dim = 7;
    EXPECT_THROW(evaluate(r.checkpoint, generate_dataset(wider).test), ConfigError);
}

TEST(Config, ParsesJson) {
    const TrainConfig c = parse_train_config(R"({
        "model": {"feature_width": 32, "head_count": 4, "stage_count": 2},
        "synth": {"class_count": 5, "sequence_length": 8, "noise_sigma": 0.5},
        "learning_rate": 1e-3, "epochs": 30, "batch_size": 10, "decay_epochs": [50, 75], "seed": 7
    })");
    EXPECT_EQ(c.model.feature_width, 32u);
    EXPECT_EQ(c.model.head_count, 4u);
    EXPECT_EQ(c.model.input_frame_dim, 0u);
    ASSERT_TRUE(c.synth.has_value());
    EXPECT_EQ(c.synth->sequence_length, 8u);
    EXPECT_DOUBLE_EQ(c.learning_rate, 1e-3);
    EXPECT_EQ(c.decay_epochs, (std::vector<std::size_t>{50, 75}));
    EXPECT_EQ(c.seed, 7u);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_train_config(R"({"epochs": 3, "bogus": 1})"), ConfigError);
    EXPECT_THROW(parse_train_config(R"({"model": {"width": 3}})"), ConfigError);
    EXPECT_THROW(parse_train_config(R"({"epochs": "many"})"), ConfigError);
    EXPECT_THROW(parse_train_config("{not json"), ConfigError);
    EXPECT_THROW(parse_train_config(R"({"synth": {"correlation": 2}})"), ConfigError);
    EXPECT_THROW(load_train_config("/nonexistent/config.json"), Error);
}

TEST(Gradcheck, ReportListsEveryGroupOnce) {
    GradcheckConfig c;
    c.seeds = 2;
    const GradcheckReport r = run_gradcheck(c);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.seeds, 2u);
    auto params = init_model<double>(c.model, 1);
    const auto names = params.named();
    ASSERT_EQ(r.groups.size(), names.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
        EXPECT_EQ(r.groups[i].name, names[i].first);
        EXPECT_EQ(r.groups[i].elements, names[i].second->numel());
        EXPECT_TRUE(seen.insert(r.groups[i].name).second);
    }
}

TEST(Gradcheck, SabotageFails) {
    GradcheckConfig c;
    c.seeds = 2;
    c.sabotage = true;
    const GradcheckReport r = run_gradcheck(c);
    EXPECT_FALSE(r.passed);
    EXPECT_GT(r.max_rel_error, c.tolerance);
}

TEST(Gradcheck, RelativeErrorDefinition) {
    const std::vector<double> a{1.0, 10.0, 0.001}, b{1.5, 11.0, 0.002};
    EXPECT_DOUBLE_EQ(max_relative_error(a, b), 0.5 / 1.5);
}

TEST(Bench, FullScaleRowsAndTiming) {
    BenchConfig c;
    c.widths = {512, 64};
    c.heads = {8, 1};
    c.lengths = {4};
    c.repeats = 3;
    std::vector<std::string> skipped;
    const auto rows = run_bench(c, &skipped);
    EXPECT_EQ(skipped.size(), 1u);  // pyramid D=64, h=8
    bool saw_pyramid = false, saw_uniform = false;
    for (const BenchRow& r : rows) {
        EXPECT_GT(r.median_ns, 0.0);
        if (r.feature_width == 512 && r.head_count == 8) {
            if (r.variant == "pyramid") {
                saw_pyramid = true;
                EXPECT_EQ(r.params, 2088960u);
            } else {
                saw_uniform = true;
                EXPECT_EQ(r.params, 1048576u);
            }
        }
    }
    EXPECT_TRUE(saw_pyramid && saw_uniform);
    for (std::size_t d : {512u, 64u}) {
        const BenchRow* p = nullptr;
        const BenchRow* u = nullptr;
        for (const BenchRow& r : rows)
            if (r.feature_width == d && r.head_count == 1) (r.variant == "pyramid" ? p : u) = &r;
        ASSERT_TRUE(p && u);
        EXPECT_EQ(p->params, u->params);
        EXPECT_EQ(p->macs, u->macs);
    }

    const std::string csv = bench_csv(rows);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "D,h,L,variant,params,macs,median_ns");
    EXPECT_NE(csv.find("512,8,4,pyramid,2088960,"), std::string::npos);
    EXPECT_NE(csv.find("512,8,4,uniform,1048576,"), std::string::npos);
    EXPECT_THROW(run_bench(BenchConfig{{8}, {1}, {4}, 0, 0}), ConfigError);
}
