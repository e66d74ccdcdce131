#include <cstdlib>
#include <string_view>

#include "msmha/kernels.hpp"

namespace msmha::kernels {

#ifdef MSMHA_HAVE_AVX2
const KernelTable& avx2_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(MSMHA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* select_initial() {
    const char* env = std::getenv("MSMHA_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_table();
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

const KernelTable*& current() {
    static const KernelTable* table = select_initial();
    return table;
}

}  // namespace

const KernelTable* avx2_table() {
#ifdef MSMHA_HAVE_AVX2
    static const bool supported = cpu_has_avx2();
    return supported ? &avx2_kernels() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current(); }

bool available(Backend backend) { return backend == Backend::scalar || avx2_table() != nullptr; }

void set_active(Backend backend) {
    if (backend == Backend::avx2 && avx2_table() != nullptr) {
        current() = avx2_table();
    } else {
        current() = &scalar_table();
    }
}

std::string_view name(Backend backend) { return backend == Backend::avx2 ? "avx2" : "scalar"; }

}  // namespace msmha::kernels
