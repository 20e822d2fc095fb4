#include <immintrin.h>

#include "xsem/simd/kernels.h"

namespace xsem::simd {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  __m128d sum = _mm_add_pd(lo, hi);
  sum = _mm_add_sd(sum, _mm_unpackhi_pd(sum, sum));
  double s = _mm_cvtsd_f64(sum);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
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

const Kernels& Avx2KernelTable() {
  static const Kernels k{"avx2", Dot, Axpy, Gemv, GemvT, Ger};
  return k;
}

}  // namespace xsem::simd
