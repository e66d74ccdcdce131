#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "msmha/model.hpp"

namespace msmha {

// End-to-end finite-difference check of cross_entropy∘classify at 64-bit.
struct GradcheckConfig {
    ModelConfig model = tiny_model();
    std::size_t seeds = 20;
    std::uint64_t first_seed = 1;
    double eps = 1e-5;
    double tolerance = 1e-4;
    bool sabotage = false;

    // T=4, F=6, D=8, h=2, S=2, C=3.
    static ModelConfig tiny_model();
};

struct GradcheckGroup {
    std::string name;
    std::size_t elements = 0;
    double max_rel_error = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckGroup> groups;  // one per parameter tensor, in model order
    double max_rel_error = 0.0;
    std::size_t seeds = 0;
    bool passed = false;
};

// |a-b| / max(1, |a|, |b|), maximized elementwise.
double max_relative_error(std::span<const double> a, std::span<const double> b);

GradcheckReport run_gradcheck(const GradcheckConfig& config);

}  // namespace msmha
