#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop arithmetic used by every dense tensor operation. Each primitive
// has a portable scalar reference implementation and, on x86-64, an AVX2/FMA
// variant. The active table is chosen once at startup from CPU features and
// the MSMHA_KERNELS environment variable ("scalar" or "avx2").
namespace msmha::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
    Backend backend;
    float (*dot_f32)(const float* a, const float* b, std::size_t n);
    double (*dot_f64)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
    void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the build or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

const KernelTable& active();
// Not thread-safe; intended for tests and benchmarks.
void set_active(Backend backend);
bool available(Backend backend);
std::string_view name(Backend backend);

inline float dot(const float* a, const float* b, std::size_t n) { return active().dot_f32(a, b, n); }
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot_f64(a, b, n); }
inline void axpy(float alpha, const float* x, float* y, std::size_t n) { active().axpy_f32(alpha, x, y, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy_f64(alpha, x, y, n); }

// Row-major GEMM helpers composed from the primitives above. All accumulate
// into c, which the caller must size and initialize.
//   gemm_nn: c[m×n] += a[m×k] · b[k×n]
//   gemm_nt: c[m×n] += a[m×k] · b[n×k]ᵀ
//   gemm_tn: c[m×n] += a[k×m]ᵀ · b[k×n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = a[i * k + p];
            if (aip != T(0)) axpy(aip, b + p * n, c + i * n, n);
        }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < m; ++i) {
            const T api = a[p * m + i];
            if (api != T(0)) axpy(api, b + p * n, c + i * n, n);
        }
}

}  // namespace msmha::kernels
