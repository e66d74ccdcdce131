// Command-line driver: gen-data, train, eval, fuse, gradcheck, bench.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msmha/bench.hpp"
#include "msmha/checkpoint.hpp"
#include "msmha/config.hpp"
#include "msmha/fusion.hpp"
#include "msmha/gradcheck.hpp"
#include "msmha/kernels.hpp"
#include "msmha/synth.hpp"
#include "msmha/train.hpp"

namespace {

using namespace msmha;

struct GenDataArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> classes, length, frame_dim, streams, train_size, test_size;
    std::optional<double> noise, correlation;
};

int run_gen_data(const GenDataArgs& a) {
    SynthConfig s;
    if (!a.config.empty()) {
        const TrainConfig tc = load_train_config(a.config);
        if (!tc.synth) throw ConfigError("config '" + a.config + "' has no synth block");
        s = *tc.synth;
    }
    if (a.seed) s.seed = *a.seed;
    if (a.classes) s.class_count = *a.classes;
    if (a.length) s.sequence_length = *a.length;
    if (a.frame_dim) s.frame_dim = *a.frame_dim;
    if (a.streams) s.stream_count = *a.streams;
    if (a.train_size) s.train_size = *a.train_size;
    if (a.test_size) s.test_size = *a.test_size;
    if (a.noise) s.noise_sigma = *a.noise;
    if (a.correlation) s.correlation = *a.correlation;
    const SynthSplit split = generate_dataset(s);
    save_split(a.out, split);
    std::cout << "wrote " << a.out << "-train.msgv (" << split.train.samples.size() << " samples) and " << a.out
              << "-test.msgv (" << split.test.samples.size() << " samples), streams:";
    for (const auto& tag : split.train.stream_tags) std::cout << ' ' << tag;
    std::cout << '\n';
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string stream;
    std::string metrics;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
};

int run_train(const TrainArgs& a) {
    TrainConfig c;
    if (!a.config.empty()) {
        c = load_train_config(a.config);
    } else {
        c.model.input_frame_dim = c.model.sequence_length = c.model.class_count = 0;
    }
    if (!a.data.empty()) c.data = a.data;
    if (!a.stream.empty()) c.stream = a.stream;
    if (a.seed) c.seed = *a.seed;
    if (a.epochs) c.epochs = *a.epochs;

    std::ofstream metrics;
    if (!a.metrics.empty()) {
        metrics.open(a.metrics);
        if (!metrics) throw IoError("cannot open metrics file '" + a.metrics + "'");
        metrics << "epoch,learning_rate,train_loss,train_accuracy,test_accuracy\n";
    }
    std::printf("%6s %12s %12s %10s %10s\n", "epoch", "lr", "train_loss", "train_acc", "test_acc");
    const TrainResult result = train(c, [&](const EpochMetrics& m) {
        std::printf("%6zu %12.3e %12.6f %10.4f %10.4f\n", m.epoch, m.learning_rate, m.train_loss, m.train_accuracy,
                    m.test_accuracy);
        std::fflush(stdout);
        if (metrics.is_open()) {
            metrics.precision(17);
            metrics << m.epoch << ',' << m.learning_rate << ',' << m.train_loss << ',' << m.train_accuracy << ','
                    << m.test_accuracy << '\n';
        }
    });
    save_checkpoint(a.out, result.checkpoint);
    std::cout << "checkpoint written to " << a.out << " (" << result.checkpoint.params.parameter_count()
              << " parameters, stream " << result.checkpoint.metadata.at("stream") << ")\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string out;
    std::string stream;
};

int run_eval(const EvalArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const Dataset data = read_dataset(a.data);
    const EvalResult r = evaluate(ck, data, a.stream);
    if (!a.out.empty()) write_dataset(a.out, r.posteriors);
    std::printf("accuracy %.6f (%zu/%zu)\n", r.accuracy, r.correct, r.posteriors.samples.size());
    return 0;
}

struct FuseArgs {
    std::vector<std::string> files;
    std::vector<std::string> names;
};

int run_fuse(const FuseArgs& a) {
    std::vector<std::string> names = a.names;
    if (names.empty()) {
        for (const auto& f : a.files) names.push_back(std::filesystem::path(f).stem().string());
    }
    if (names.size() != a.files.size()) throw ArgumentError("--names must list one name per posterior file");
    std::vector<Dataset> sets;
    for (const auto& f : a.files) sets.push_back(read_dataset(f));
    const FusionReport report = fuse_posterior_sets(sets, names);

    std::size_t name_width = 8;
    for (const auto& n : names) name_width = std::max(name_width, n.size());
    std::printf("%-3s", "#");
    for (const auto& n : names) std::printf(" %*s", static_cast<int>(name_width), n.c_str());
    std::printf(" %10s\n", "accuracy");
    for (const SubsetAccuracy& row : report.subsets) {
        std::printf("%-3zu", row.streams.size());
        for (const auto& n : names) {
            const bool used = std::find(row.streams.begin(), row.streams.end(), n) != row.streams.end();
            std::printf(" %*s", static_cast<int>(name_width), used ? "x" : "");
        }
        std::printf(" %9.2f%%\n", 100.0 * row.accuracy);
    }
    return 0;
}

struct GradcheckArgs {
    std::size_t seeds = 20;
    std::uint64_t first_seed = 1;
    double eps = 1e-5;
    double tolerance = 1e-4;
    bool sabotage = false;
};

int run_gradcheck_cmd(const GradcheckArgs& a) {
    GradcheckConfig c;
    c.seeds = a.seeds;
    c.first_seed = a.first_seed;
    c.eps = a.eps;
    c.tolerance = a.tolerance;
    c.sabotage = a.sabotage;
    const GradcheckReport r = run_gradcheck(c);
    std::printf("%-24s %8s %14s\n", "group", "elements", "max_rel_error");
    for (const auto& g : r.groups) {
        std::printf("%-24s %8zu %14.3e %s\n", g.name.c_str(), g.elements, g.max_rel_error,
                    g.max_rel_error <= c.tolerance ? "ok" : "FAIL");
    }
    std::printf("%s: max relative error %.3e over %zu seeds (tolerance %.1e)\n", r.passed ? "PASS" : "FAIL",
                r.max_rel_error, r.seeds, c.tolerance);
    return r.passed ? 0 : 1;
}

struct BenchArgs {
    std::vector<std::size_t> widths{64, 128, 512};
    std::vector<std::size_t> heads{1, 4, 8};
    std::vector<std::size_t> lengths{40};
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    std::string out;
};

int run_bench_cmd(const BenchArgs& a) {
    BenchConfig c{a.widths, a.heads, a.lengths, a.repeats, a.seed};
    std::vector<std::string> skipped;
    const std::string csv = bench_csv(run_bench(c, &skipped));
    for (const auto& s : skipped) std::cerr << "skipped " << s << '\n';
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(a.out);
        if (!out) throw IoError("cannot open '" + a.out + "'");
        out << csv;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscaled multi-head attention video transformer toolkit"};
    app.require_subcommand(1);
    std::string kernels;
    app.add_option("--kernels", kernels, "Force the kernel backend")->check(CLI::IsMember({"scalar", "avx2"}));

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic multi-stream gesture dataset");
    gen_cmd->add_option("--config", gen.config, "JSON config with a synth block");
    gen_cmd->add_option("--out", gen.out, "Output prefix (<out>-train.msgv, <out>-test.msgv)")->required();
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--classes", gen.classes);
    gen_cmd->add_option("--length", gen.length);
    gen_cmd->add_option("--frame-dim", gen.frame_dim);
    gen_cmd->add_option("--streams", gen.streams);
    gen_cmd->add_option("--train-size", gen.train_size);
    gen_cmd->add_option("--test-size", gen.test_size);
    gen_cmd->add_option("--noise", gen.noise);
    gen_cmd->add_option("--correlation", gen.correlation);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on one stream");
    train_cmd->add_option("--config", tr.config, "JSON training config");
    train_cmd->add_option("--data", tr.data, "Dataset prefix (overrides the config)");
    train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
    train_cmd->add_option("--stream", tr.stream, "Stream tag to train on");
    train_cmd->add_option("--metrics", tr.metrics, "Per-epoch CSV output");
    train_cmd->add_option("--seed", tr.seed);
    train_cmd->add_option("--epochs", tr.epochs);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write posteriors");
    eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
    eval_cmd->add_option("--data", ev.data, "Dataset file")->required();
    eval_cmd->add_option("--out", ev.out, "Posterior file");
    eval_cmd->add_option("--stream", ev.stream, "Stream tag (default: the checkpoint's)");

    FuseArgs fu;
    auto* fuse_cmd = app.add_subcommand("fuse", "Late-fuse posterior files over every stream subset");
    fuse_cmd->add_option("files", fu.files, "Posterior files")->required()->check(CLI::ExistingFile);
    fuse_cmd->add_option("--names", fu.names, "Stream names, one per file")->delimiter(',');

    GradcheckArgs gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all model gradients");
    gc_cmd->add_option("--seeds", gc.seeds);
    gc_cmd->add_option("--first-seed", gc.first_seed);
    gc_cmd->add_option("--eps", gc.eps);
    gc_cmd->add_option("--tolerance", gc.tolerance);
    gc_cmd->add_flag("--sabotage", gc.sabotage, "Use a wrong attention-scaling gradient (negative control)");

    BenchArgs be;
    auto* bench_cmd = app.add_subcommand("bench", "Cost model and timing of pyramid vs uniform attention");
    bench_cmd->add_option("--D,--widths", be.widths, "Feature widths")->delimiter(',');
    bench_cmd->add_option("--heads", be.heads, "Head counts")->delimiter(',');
    bench_cmd->add_option("--L,--lengths", be.lengths, "Sequence lengths")->delimiter(',');
    bench_cmd->add_option("--repeats", be.repeats);
    bench_cmd->add_option("--seed", be.seed);
    bench_cmd->add_option("--out", be.out, "CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!kernels.empty()) {
            const auto backend = kernels == "avx2" ? kernels::Backend::avx2 : kernels::Backend::scalar;
            if (!kernels::available(backend)) throw ConfigError("kernel backend '" + kernels + "' is unavailable");
            kernels::set_active(backend);
        }
        if (*gen_cmd) return run_gen_data(gen);
        if (*train_cmd) return run_train(tr);
        if (*eval_cmd) return run_eval(ev);
        if (*fuse_cmd) return run_fuse(fu);
        if (*gc_cmd) return run_gradcheck_cmd(gc);
        if (*bench_cmd) return run_bench_cmd(be);
    } catch (const msmha::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
