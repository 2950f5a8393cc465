// AArch64 Advanced SIMD variants. NEON is architecturally mandatory on AArch64, so
// no runtime probe is needed beyond compiling this file in.

#include "mitoforge/simd/kernels.hpp"

#include <arm_neon.h>

namespace mitoforge::simd {

namespace {

inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const float64x2_t av = vdupq_n_f64(alpha);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        vst1q_f64(y + j, vfmaq_f64(vld1q_f64(y + j), av, vld1q_f64(x + j)));
        vst1q_f64(y + j + 2, vfmaq_f64(vld1q_f64(y + j + 2), av, vld1q_f64(x + j + 2)));
    }
    for (; j < n; ++j) y[j] += alpha * x[j];
}

inline double dot(std::size_t k, const double* x, const double* y) {
    float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
        s0 = vfmaq_f64(s0, vld1q_f64(x + p), vld1q_f64(y + p));
        s1 = vfmaq_f64(s1, vld1q_f64(x + p + 2), vld1q_f64(y + p + 2));
    }
    double s = vaddvq_f64(vaddq_f64(s0, s1));
    for (; p < k; ++p) s += x[p] * y[p];
    return s;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) axpy(n, a[i * k + p], b + p * n, c + i * n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(k, a + i * k, b + j * k);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t i = 0; i < m; ++i) axpy(n, a[p * m + i], b + p * n, c + i * n);
}

void outer_accumulate(std::size_t rows, std::size_t cols, double scale, const double* row_w, const double* col_w,
                      double* img, std::size_t stride) {
    for (std::size_t r = 0; r < rows; ++r) axpy(cols, scale * row_w[r], col_w, img + r * stride);
}

constexpr KernelTable kNeon{"neon", gemm_nn, gemm_nt, gemm_tn, outer_accumulate};

}  // namespace

namespace detail {
const KernelTable& neon_table() noexcept { return kNeon; }
}  // namespace detail

}  // namespace mitoforge::simd
