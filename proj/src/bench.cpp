#include "msmha/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "msmha/attention.hpp"
#include "msmha/errors.hpp"

namespace msmha {

namespace {

double time_forward(const HeadSchedule& schedule, std::size_t length, std::size_t repeats, Rng& rng) {
    MsMhaParams<float> params = init_msmha_params<float>(schedule, rng);
    for (auto* group : {&params.query, &params.key, &params.value})
        for (auto& t : *group) t = t.detach();
    params.output = params.output.detach();
    std::vector<float> x(length * schedule.input_width);
    for (float& v : x) v = static_cast<float>(rng.normal());
    const Tensor<float> input = Tensor<float>::create({length, schedule.input_width}, std::move(x));

    std::vector<double> samples;
    samples.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const Tensor<float> out = msmha(input, params, schedule);
        const auto stop = std::chrono::steady_clock::now();
        samples.push_back(std::max(1.0, std::chrono::duration<double, std::nano>(stop - start).count()));
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t mid = samples.size() / 2;
    return samples.size() % 2 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& config, std::vector<std::string>* skipped) {
    if (config.repeats == 0) throw ConfigError("bench: repeats must be at least 1");
    Rng rng(config.seed);
    std::vector<BenchRow> rows;
    for (std::size_t d : config.widths)
        for (std::size_t h : config.heads)
            for (std::size_t l : config.lengths) {
                if (l == 0) throw ConfigError("bench: sequence length must be positive");
                for (const char* variant : {"pyramid", "uniform"}) {
                    HeadSchedule schedule;
                    try {
                        schedule = std::string_view(variant) == "pyramid" ? head_schedule(d, h) : uniform_schedule(d, h);
                    } catch (const ConfigError& e) {
                        if (skipped) skipped->push_back(std::string(variant) + " D=" + std::to_string(d) +
                                                        " h=" + std::to_string(h) + ": " + e.what());
                        continue;
                    }
                    BenchRow row;
                    row.feature_width = d;
                    row.head_count = h;
                    row.sequence_length = l;
                    row.variant = variant;
                    row.params = schedule_param_count(schedule);
                    row.macs = attention_mac_count(schedule, l);
                    row.median_ns = time_forward(schedule, l, config.repeats, rng);
                    rows.push_back(row);
                }
            }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "D,h,L,variant,params,macs,median_ns\n";
    for (const BenchRow& r : rows) {
        os << r.feature_width << ',' << r.head_count << ',' << r.sequence_length << ',' << r.variant << ','
           << r.params << ',' << r.macs << ',' << static_cast<std::uint64_t>(r.median_ns) << '\n';
    }
    return os.str();
}

}  // namespace msmha
