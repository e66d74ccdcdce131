#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "msmha/rng.hpp"
#include "msmha/tensor.hpp"

namespace msmha {

// Uniform in ±√(6/(fan_in+fan_out)).
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng, bool requires_grad = true) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<T> values(fan_in * fan_out);
    for (T& v : values) v = static_cast<T>(rng.uniform(-limit, limit));
    return Tensor<T>::create({fan_in, fan_out}, std::move(values), requires_grad);
}

}  // namespace msmha
