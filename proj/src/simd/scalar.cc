#include "xsem/simd/kernels.h"

namespace xsem::simd {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void Gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += Dot(a + r * cols, x, cols);
}

void GemvT(const double* a, std::size_t rows, std::size_t cols,
           const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) Axpy(x[r], a + r * cols, y, cols);
}

void Ger(double alpha, const double* x, std::size_t rows, const double* y,
         std::size_t cols, double* a) {
  for (std::size_t r = 0; r < rows; ++r) Axpy(alpha * x[r], y, a + r * cols, cols);
}

}  // namespace

const Kernels& ScalarKernels() {
  static const Kernels k{"scalar", Dot, Axpy, Gemv, GemvT, Ger};
  return k;
}

}  // namespace xsem::simd
