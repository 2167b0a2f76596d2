#include "paththerm/simd/kernels.hpp"

#include "kernels_internal.hpp"

namespace paththerm::simd {
namespace {

void tridiag_apply_scalar(const double* lo, const double* di, const double* up, const double* in,
                          double* out, std::size_t rows, std::size_t width, bool periodic) {
  if (rows == 1) {
    for (std::size_t j = 0; j < width; ++j) out[j] = di[0] * in[j];
    return;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double* mid = in + r * width;
    double* dst = out + r * width;
    const bool first = r == 0;
    const bool last = r + 1 == rows;
    const double* below = first ? (periodic ? in + (rows - 1) * width : nullptr) : mid - width;
    const double* above = last ? (periodic ? in : nullptr) : mid + width;
    if (below && above) {
      for (std::size_t j = 0; j < width; ++j)
        dst[j] = lo[r] * below[j] + di[r] * mid[j] + up[r] * above[j];
    } else if (above) {
      for (std::size_t j = 0; j < width; ++j) dst[j] = di[r] * mid[j] + up[r] * above[j];
    } else {
      for (std::size_t j = 0; j < width; ++j) dst[j] = lo[r] * below[j] + di[r] * mid[j];
    }
  }
}

void tridiag_solve_scalar(const double* mult, const double* inv_pivot, const double* up,
                          double* rhs, std::size_t rows, std::size_t width) {
  for (std::size_t r = 1; r < rows; ++r) {
    const double m = mult[r];
    const double* prev = rhs + (r - 1) * width;
    double* cur = rhs + r * width;
    for (std::size_t j = 0; j < width; ++j) cur[j] = cur[j] - m * prev[j];
  }
  {
    double* cur = rhs + (rows - 1) * width;
    const double p = inv_pivot[rows - 1];
    for (std::size_t j = 0; j < width; ++j) cur[j] = cur[j] * p;
  }
  for (std::size_t r = rows - 1; r-- > 0;) {
    const double c = up[r];
    const double p = inv_pivot[r];
    const double* next = rhs + (r + 1) * width;
    double* cur = rhs + r * width;
    for (std::size_t j = 0; j < width; ++j) cur[j] = (cur[j] - c * next[j]) * p;
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

// Blocked pairwise summation of term(i), i in [begin, begin + n): O(log n)
// error growth and an evaluation order fixed by n alone.
template <class Term>
double pairwise_range(const Term& term, std::size_t begin, std::size_t n) {
  constexpr std::size_t block = 16;
  if (n <= block) {
    double s = 0.0;
    for (std::size_t i = begin; i < begin + n; ++i) s += term(i);
    return s;
  }
  const std::size_t half = (n / 2 + block - 1) / block * block;
  return pairwise_range(term, begin, half) + pairwise_range(term, begin + half, n - half);
}

template <class Term>
double pairwise(std::size_t n, const Term& term) {
  return pairwise_range(term, 0, n);
}

double sum_scalar(const double* x, std::size_t n) {
  return pairwise(n, [x](std::size_t i) { return x[i]; });
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  return pairwise(n, [x, y](std::size_t i) { return x[i] * y[i]; });
}

double sum_sq_increments_scalar(const double* x, std::size_t n) {
  if (n < 2) return 0.0;
  return pairwise(n - 1, [x](std::size_t i) {
    const double d = x[i + 1] - x[i];
    return d * d;
  });
}

double trapezoid_sq_offset_scalar(const double* x, std::size_t n, double center) {
  if (n == 0) return 0.0;
  if (n == 1) return 0.0;
  const double a = x[0] - center;
  const double b = x[n - 1] - center;
  const double interior = pairwise(n - 2, [x, center](std::size_t i) {
    const double d = x[i + 1] - center;
    return d * d;
  });
  return interior + 0.5 * (a * a + b * b);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",         tridiag_apply_scalar,    tridiag_solve_scalar,        axpy_scalar,
      sum_scalar,       dot_scalar,              sum_sq_increments_scalar,    trapezoid_sq_offset_scalar,
  };
  return table;
}

}  // namespace paththerm::simd
