#include "msmha/kernels.hpp"

namespace msmha::kernels {
namespace {

template <typename T>
T dot_scalar(const T* a, const T* b, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy_scalar(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        Backend::scalar,
        &dot_scalar<float>,
        &dot_scalar<double>,
        &axpy_scalar<float>,
        &axpy_scalar<double>,
    };
    return table;
}

}  // namespace msmha::kernels
