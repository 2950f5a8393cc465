#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops shared by the occupancy MLP and the PSF renderer.
// Every kernel has a scalar reference implementation; vector variants must agree
// with it to rounding (they may reassociate sums and fuse multiply-adds).
//
// All matrices are dense row-major doubles. The gemm kernels accumulate into C.

namespace mitoforge::simd {

struct KernelTable {
    std::string_view name;

    /// C(m×n) += A(m×k) · B(k×n)
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    /// C(m×n) += A(m×k) · B(n×k)ᵀ
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    /// C(m×n) += A(k×m)ᵀ · B(k×n)
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    /// img[r·stride + c] += scale · row_w[r] · col_w[c]  for r < rows, c < cols
    void (*outer_accumulate)(std::size_t rows, std::size_t cols, double scale, const double* row_w,
                             const double* col_w, double* img, std::size_t stride);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the variant was not compiled in or the CPU lacks the instructions.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

/// The table used by the library. Chosen once: the best supported variant, unless the
/// MITOFORGE_SIMD environment variable is set to "scalar", "avx2" or "neon".
const KernelTable& active() noexcept;

}  // namespace mitoforge::simd
