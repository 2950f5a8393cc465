#include <cstdlib>
#include <string_view>

#include "mitoforge/log.hpp"
#include "mitoforge/simd/kernels.hpp"

namespace mitoforge::simd {

namespace detail {
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(__aarch64__)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

const KernelTable* avx2_kernels() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(__aarch64__)
    return &detail::neon_table();
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& select() noexcept {
    const char* env = std::getenv("MITOFORGE_SIMD");
    const std::string_view want = env ? env : "";
    if (want == "scalar") return scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return *avx2_kernels();
    if (want == "neon" && neon_kernels()) return *neon_kernels();
    if (!want.empty()) log::warn("requested SIMD variant unavailable, using best supported", {{"requested", want}});
    if (const auto* t = avx2_kernels()) return *t;
    if (const auto* t = neon_kernels()) return *t;
    return scalar_kernels();
}

}  // namespace

const KernelTable& active() noexcept {
    static const KernelTable& table = select();
    return table;
}

}  // namespace mitoforge::simd
