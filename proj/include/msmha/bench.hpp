#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace msmha {

struct BenchConfig {
    std::vector<std::size_t> widths{64, 128, 512};
    std::vector<std::size_t> heads{1, 4, 8};
    std::vector<std::size_t> lengths{40};
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
};

struct BenchRow {
    std::size_t feature_width = 0;
    std::size_t head_count = 0;
    std::size_t sequence_length = 0;
    std::string variant;  // "pyramid" or "uniform"
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
    double median_ns = 0.0;
};

// Times forward passes of the pyramid and uniform attention blocks and
// attaches the analytic cost model. Invalid (D, h) pairs for a variant are
// skipped and described in `skipped`.
std::vector<BenchRow> run_bench(const BenchConfig& config, std::vector<std::string>* skipped = nullptr);

// Header "D,h,L,variant,params,macs,median_ns" followed by one line per row.
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace msmha
