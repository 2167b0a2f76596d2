#pragma once

#include <cstddef>

// Data-parallel inner loops behind the solvers and path estimators.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2 variant selected at runtime. Row-wise kernels
// (tridiag_*, axpy) perform the same floating-point operations in the same
// order per lane as the scalar code, so their results are bit-identical.
// Reductions (sum, dot, ...) reassociate and agree only to rounding.
//
// Matrices are row-major with `width` contiguous columns per row; the
// tridiagonal kernels couple rows, and the columns are independent
// right-hand sides.

namespace paththerm::simd {

enum class Backend { scalar, avx2 };

struct KernelTable {
  const char* name;

  /// out[r][:] = lo[r]*in[r-1][:] + di[r]*in[r][:] + up[r]*in[r+1][:].
  /// Out-of-range neighbours wrap when `periodic`, otherwise they are dropped.
  void (*tridiag_apply)(const double* lo, const double* di, const double* up, const double* in,
                        double* out, std::size_t rows, std::size_t width, bool periodic);

  /// In-place solve of a factored tridiagonal system (Thomas algorithm).
  /// mult[r] (r >= 1) are the elimination multipliers, inv_pivot[r] the
  /// reciprocal pivots and up[r] the superdiagonal.
  void (*tridiag_solve)(const double* mult, const double* inv_pivot, const double* up,
                        double* rhs, std::size_t rows, std::size_t width);

  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);

  /// sum_i (x[i+1] - x[i])^2
  double (*sum_sq_increments)(const double* x, std::size_t n);

  /// Trapezoid-weighted sum of (x[i] - center)^2: end points carry weight 1/2.
  double (*trapezoid_sq_offset)(const double* x, std::size_t n, double center);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

bool avx2_available();

/// Kernels used by the library. Defaults to the best available backend.
const KernelTable& active();
Backend backend();

/// Throws InvalidArgument when requesting an unavailable backend.
void set_backend(Backend b);

/// Restores `previous` on destruction; used by deterministic runs and tests.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b) : previous_(backend()) { set_backend(b); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

/// Flushes subnormal results and operands to zero on this thread while in
/// scope. Heat-kernel tails decay through the subnormal range, where x86
/// arithmetic is two orders of magnitude slower.
class FlushDenormals {
 public:
  FlushDenormals();
  ~FlushDenormals();
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_;
};

}  // namespace paththerm::simd
