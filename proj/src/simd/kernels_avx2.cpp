#include "kernels_internal.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define PATHTHERM_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

namespace paththerm::simd::detail {

#if PATHTHERM_HAVE_AVX2_KERNELS

#define PT_AVX2 __attribute__((target("avx2")))

namespace {

PT_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

PT_AVX2 void tridiag_apply_avx2(const double* lo, const double* di, const double* up,
                                const double* in, double* out, std::size_t rows,
                                std::size_t width, bool periodic) {
  if (rows == 1) {
    const __m256d d = _mm256_set1_pd(di[0]);
    std::size_t j = 0;
    for (; j + 4 <= width; j += 4)
      _mm256_storeu_pd(out + j, _mm256_mul_pd(d, _mm256_loadu_pd(in + j)));
    for (; j < width; ++j) out[j] = di[0] * in[j];
    return;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double* mid = in + r * width;
    double* dst = out + r * width;
    const bool first = r == 0;
    const bool last = r + 1 == rows;
    const double* below = first ? (periodic ? in + (rows - 1) * width : nullptr) : mid - width;
    const double* above = last ? (periodic ? in : nullptr) : mid + width;
    const __m256d vl = _mm256_set1_pd(lo[r]);
    const __m256d vd = _mm256_set1_pd(di[r]);
    const __m256d vu = _mm256_set1_pd(up[r]);
    std::size_t j = 0;
    if (below && above) {
      for (; j + 4 <= width; j += 4) {
        const __m256d t = _mm256_add_pd(_mm256_mul_pd(vl, _mm256_loadu_pd(below + j)),
                                        _mm256_mul_pd(vd, _mm256_loadu_pd(mid + j)));
        _mm256_storeu_pd(dst + j, _mm256_add_pd(t, _mm256_mul_pd(vu, _mm256_loadu_pd(above + j))));
      }
      for (; j < width; ++j) dst[j] = lo[r] * below[j] + di[r] * mid[j] + up[r] * above[j];
    } else if (above) {
      for (; j + 4 <= width; j += 4)
        _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_mul_pd(vd, _mm256_loadu_pd(mid + j)),
                                                _mm256_mul_pd(vu, _mm256_loadu_pd(above + j))));
      for (; j < width; ++j) dst[j] = di[r] * mid[j] + up[r] * above[j];
    } else {
      for (; j + 4 <= width; j += 4)
        _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_mul_pd(vl, _mm256_loadu_pd(below + j)),
                                                _mm256_mul_pd(vd, _mm256_loadu_pd(mid + j))));
      for (; j < width; ++j) dst[j] = lo[r] * below[j] + di[r] * mid[j];
    }
  }
}

PT_AVX2 void tridiag_solve_avx2(const double* mult, const double* inv_pivot, const double* up,
                                double* rhs, std::size_t rows, std::size_t width) {
  for (std::size_t r = 1; r < rows; ++r) {
    const double m = mult[r];
    const __m256d vm = _mm256_set1_pd(m);
    const double* prev = rhs + (r - 1) * width;
    double* cur = rhs + r * width;
    std::size_t j = 0;
    for (; j + 4 <= width; j += 4)
      _mm256_storeu_pd(cur + j, _mm256_sub_pd(_mm256_loadu_pd(cur + j),
                                              _mm256_mul_pd(vm, _mm256_loadu_pd(prev + j))));
    for (; j < width; ++j) cur[j] = cur[j] - m * prev[j];
  }
  {
    double* cur = rhs + (rows - 1) * width;
    const double p = inv_pivot[rows - 1];
    const __m256d vp = _mm256_set1_pd(p);
    std::size_t j = 0;
    for (; j + 4 <= width; j += 4)
      _mm256_storeu_pd(cur + j, _mm256_mul_pd(_mm256_loadu_pd(cur + j), vp));
    for (; j < width; ++j) cur[j] = cur[j] * p;
  }
  for (std::size_t r = rows - 1; r-- > 0;) {
    const double c = up[r];
    const double p = inv_pivot[r];
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d vp = _mm256_set1_pd(p);
    const double* next = rhs + (r + 1) * width;
    double* cur = rhs + r * width;
    std::size_t j = 0;
    for (; j + 4 <= width; j += 4) {
      const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(cur + j),
                                      _mm256_mul_pd(vc, _mm256_loadu_pd(next + j)));
      _mm256_storeu_pd(cur + j, _mm256_mul_pd(t, vp));
    }
    for (; j < width; ++j) cur[j] = (cur[j] - c * next[j]) * p;
  }
}

PT_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i),
                                          _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

PT_AVX2 double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    a2 = _mm256_add_pd(a2, _mm256_loadu_pd(x + i + 8));
    a3 = _mm256_add_pd(a3, _mm256_loadu_pd(x + i + 12));
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += x[i];
  return s;
}

PT_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = a0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

PT_AVX2 double sum_sq_increments_avx2(const double* x, std::size_t n) {
  if (n < 2) return 0.0;
  const std::size_t m = n - 1;
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i + 1), _mm256_loadu_pd(x + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; i < m; ++i) {
    const double d = x[i + 1] - x[i];
    s += d * d;
  }
  return s;
}

PT_AVX2 double trapezoid_sq_offset_avx2(const double* x, std::size_t n, double center) {
  if (n < 2) return 0.0;
  const __m256d vc = _mm256_set1_pd(center);
  const double* inner = x + 1;
  const std::size_t m = n - 2;
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(inner + i), vc);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; i < m; ++i) {
    const double d = inner[i] - center;
    s += d * d;
  }
  const double a = x[0] - center;
  const double b = x[n - 1] - center;
  return s + 0.5 * (a * a + b * b);
}

}  // namespace

const KernelTable* avx2_table_if_compiled() {
  static const KernelTable table{
      "avx2",   tridiag_apply_avx2, tridiag_solve_avx2,     axpy_avx2,
      sum_avx2, dot_avx2,           sum_sq_increments_avx2, trapezoid_sq_offset_avx2,
  };
  return &table;
}

#else

const KernelTable* avx2_table_if_compiled() { return nullptr; }

#endif

}  // namespace paththerm::simd::detail
