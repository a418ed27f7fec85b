#pragma once

// Data-parallel inner loops used by the forward pass, the LMI assembly and
// the Gershgorin disc computation. Each kernel has a portable scalar
// reference and, on x86-64, an AVX2/FMA variant. The variant is picked once
// at runtime from CPUID; GRESNET_SIMD=scalar|avx2 overrides the choice.
//
// The vector variants reassociate sums, so results agree with the scalar
// reference to a few ulps of the accumulated magnitude, not bit-for-bit.

#include <cstddef>
#include <string_view>

namespace gresnet::simd {

struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i |a[i]|
  double (*abs_sum)(const double* a, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = M x + bias (bias may be null); M is rows x cols row-major
  void (*gemv)(const double* m, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y);
  // y = M^T x; M is rows x cols row-major, y has cols entries
  void (*gemv_t)(const double* m, std::size_t rows, std::size_t cols, const double* x,
                 double* y);
};

const KernelTable& scalar_kernels() noexcept;

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;

// The table selected for this process.
const KernelTable& active() noexcept;

}  // namespace gresnet::simd
