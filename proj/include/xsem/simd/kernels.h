#pragma once

// Dense double-precision primitives used by the neural kernel. Every entry
// has a portable scalar version and, on x86-64, an AVX2+FMA version selected
// at run time. Matrices are row-major. Setting XSEM_SIMD=scalar in the
// environment forces the scalar versions.

#include <cstddef>
#include <string_view>

namespace xsem::simd {

struct Kernels {
  std::string_view name;
  // a . b
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += A x, A is rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y += A^T x, A is rows x cols
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // A += alpha * x y^T, A is rows x cols
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y,
              std::size_t cols, double* a);
};

const Kernels& ScalarKernels();
// nullptr when the build or the CPU lacks AVX2 and FMA.
const Kernels* Avx2Kernels();
// The variant in use: AVX2 when available unless XSEM_SIMD=scalar.
const Kernels& Active();

}  // namespace xsem::simd
