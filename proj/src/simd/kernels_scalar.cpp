#include "mitoforge/simd/kernels.hpp"

namespace mitoforge::simd {

namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            c[i * n + j] += s;
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
        }
    }
}

void outer_accumulate(std::size_t rows, std::size_t cols, double scale, const double* row_w, const double* col_w,
                      double* img, std::size_t stride) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double s = scale * row_w[r];
        double* dst = img + r * stride;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += s * col_w[c];
    }
}

constexpr KernelTable kScalar{"scalar", gemm_nn, gemm_nt, gemm_tn, outer_accumulate};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace mitoforge::simd
