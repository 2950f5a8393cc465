// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and is
// only entered after the dispatcher has confirmed CPU support.

#include "mitoforge/simd/kernels.hpp"

#include <immintrin.h>

namespace mitoforge::simd {

namespace {

// One row of C, columns [j, j+16), accumulated in registers over the full k loop.
inline void nn_row_block16(std::size_t n, std::size_t k, const double* arow, const double* b, double* crow,
                           std::size_t j) {
    __m256d c0 = _mm256_loadu_pd(crow + j);
    __m256d c1 = _mm256_loadu_pd(crow + j + 4);
    __m256d c2 = _mm256_loadu_pd(crow + j + 8);
    __m256d c3 = _mm256_loadu_pd(crow + j + 12);
    for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_broadcast_sd(arow + p);
        const double* bp = b + p * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 12), c3);
    }
    _mm256_storeu_pd(crow + j, c0);
    _mm256_storeu_pd(crow + j + 4, c1);
    _mm256_storeu_pd(crow + j + 8, c2);
    _mm256_storeu_pd(crow + j + 12, c3);
}

// Two rows of C sharing the B loads.
inline void nn_2row_block16(std::size_t n, std::size_t k, const double* a0, const double* a1, const double* b,
                            double* c0row, double* c1row, std::size_t j) {
    __m256d x0 = _mm256_loadu_pd(c0row + j), x1 = _mm256_loadu_pd(c0row + j + 4);
    __m256d x2 = _mm256_loadu_pd(c0row + j + 8), x3 = _mm256_loadu_pd(c0row + j + 12);
    __m256d y0 = _mm256_loadu_pd(c1row + j), y1 = _mm256_loadu_pd(c1row + j + 4);
    __m256d y2 = _mm256_loadu_pd(c1row + j + 8), y3 = _mm256_loadu_pd(c1row + j + 12);
    for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(bp), b1 = _mm256_loadu_pd(bp + 4);
        const __m256d b2 = _mm256_loadu_pd(bp + 8), b3 = _mm256_loadu_pd(bp + 12);
        const __m256d u = _mm256_broadcast_sd(a0 + p);
        const __m256d v = _mm256_broadcast_sd(a1 + p);
        x0 = _mm256_fmadd_pd(u, b0, x0);
        x1 = _mm256_fmadd_pd(u, b1, x1);
        x2 = _mm256_fmadd_pd(u, b2, x2);
        x3 = _mm256_fmadd_pd(u, b3, x3);
        y0 = _mm256_fmadd_pd(v, b0, y0);
        y1 = _mm256_fmadd_pd(v, b1, y1);
        y2 = _mm256_fmadd_pd(v, b2, y2);
        y3 = _mm256_fmadd_pd(v, b3, y3);
    }
    _mm256_storeu_pd(c0row + j, x0);
    _mm256_storeu_pd(c0row + j + 4, x1);
    _mm256_storeu_pd(c0row + j + 8, x2);
    _mm256_storeu_pd(c0row + j + 12, x3);
    _mm256_storeu_pd(c1row + j, y0);
    _mm256_storeu_pd(c1row + j + 4, y1);
    _mm256_storeu_pd(c1row + j + 8, y2);
    _mm256_storeu_pd(c1row + j + 12, y3);
}

inline void nn_row_tail(std::size_t n, std::size_t k, const double* arow, const double* b, double* crow,
                        std::size_t j0) {
    std::size_t j = j0;
    for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_loadu_pd(crow + j);
        for (std::size_t p = 0; p < k; ++p)
            acc = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_loadu_pd(b + p * n + j), acc);
        _mm256_storeu_pd(crow + j, acc);
    }
    for (; j < n; ++j) {
        double s = crow[j];
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
        crow[j] = s;
    }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    const std::size_t n16 = n - n % 16;
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
        for (std::size_t j = 0; j < n16; j += 16)
            nn_2row_block16(n, k, a + i * k, a + (i + 1) * k, b, c + i * n, c + (i + 1) * n, j);
        nn_row_tail(n, k, a + i * k, b, c + i * n, n16);
        nn_row_tail(n, k, a + (i + 1) * k, b, c + (i + 1) * n, n16);
    }
    for (; i < m; ++i) {
        for (std::size_t j = 0; j < n16; j += 16) nn_row_block16(n, k, a + i * k, b, c + i * n, j);
        nn_row_tail(n, k, a + i * k, b, c + i * n, n16);
    }
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(std::size_t k, const double* x, const double* y) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    std::size_t p = 0;
    for (; p + 8 <= k; p += 8) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p + 4), _mm256_loadu_pd(y + p + 4), s1);
    }
    for (; p + 4 <= k; p += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), s0);
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; p < k; ++p) s += x[p] * y[p];
    return s;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(k, a + i * k, b + j * k);
}

inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        _mm256_storeu_pd(y + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
        _mm256_storeu_pd(y + j + 4, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + j + 4), _mm256_loadu_pd(y + j + 4)));
    }
    for (; j + 4 <= n; j += 4)
        _mm256_storeu_pd(y + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
    for (; j < n; ++j) y[j] += alpha * x[j];
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) axpy(n, arow[i], brow, c + i * n);
    }
}

void outer_accumulate(std::size_t rows, std::size_t cols, double scale, const double* row_w, const double* col_w,
                      double* img, std::size_t stride) {
    for (std::size_t r = 0; r < rows; ++r) axpy(cols, scale * row_w[r], col_w, img + r * stride);
}

constexpr KernelTable kAvx2{"avx2", gemm_nn, gemm_nt, gemm_tn, outer_accumulate};

}  // namespace

namespace detail {
const KernelTable& avx2_table() noexcept { return kAvx2; }
}  // namespace detail

}  // namespace mitoforge::simd
