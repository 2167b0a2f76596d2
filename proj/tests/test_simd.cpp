#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "paththerm/diffusion.hpp"
#include "paththerm/rng.hpp"
#include "paththerm/simd/kernels.hpp"

using namespace paththerm;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1, double hi = 1) {
  RngStream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const std::size_t widths[] = {1, 2, 3, 4, 5, 7, 8, 16, 33};
const std::size_t rows_list[] = {1, 2, 3, 10, 37};

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar tridiagonal product matches a dense reference") {
  const auto& k = simd::scalar_kernels();
  for (bool periodic : {false, true}) {
    for (std::size_t rows : rows_list) {
      const std::size_t w = 3;
      const auto lo = random_vector(rows, 1), di = random_vector(rows, 2), up = random_vector(rows, 3);
      const auto in = random_vector(rows * w, 4);
      std::vector<double> out(rows * w);
      k.tridiag_apply(lo.data(), di.data(), up.data(), in.data(), out.data(), rows, w, periodic);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < w; ++j) {
          double ref = di[r] * in[r * w + j];
          if (rows > 1) {
            if (r > 0) ref += lo[r] * in[(r - 1) * w + j];
            else if (periodic) ref += lo[r] * in[(rows - 1) * w + j];
            if (r + 1 < rows) ref += up[r] * in[(r + 1) * w + j];
            else if (periodic) ref += up[r] * in[j];
          }
          CHECK(out[r * w + j] == doctest::Approx(ref).epsilon(1e-14));
        }
      }
    }
  }
}

TEST_CASE("scalar Thomas solve inverts the tridiagonal matrix") {
  const auto& k = simd::scalar_kernels();
  for (std::size_t rows : rows_list) {
    const std::size_t w = 4;
    auto sub = random_vector(rows, 5), sup = random_vector(rows, 6);
    auto dia = random_vector(rows, 7, 3.0, 4.0);
    // Factor: mult[r] = sub[r] / pivot[r-1], pivot[r] = dia[r] - mult[r] * sup[r-1].
    std::vector<double> mult(rows, 0.0), inv(rows);
    double pivot = dia[0];
    inv[0] = 1.0 / pivot;
    for (std::size_t r = 1; r < rows; ++r) {
      mult[r] = sub[r] / pivot;
      pivot = dia[r] - mult[r] * sup[r - 1];
      inv[r] = 1.0 / pivot;
    }
    const auto b = random_vector(rows * w, 8);
    auto x = b;
    k.tridiag_solve(mult.data(), inv.data(), sup.data(), x.data(), rows, w);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) {
        double ax = dia[r] * x[r * w + j];
        if (r > 0) ax += sub[r] * x[(r - 1) * w + j];
        if (r + 1 < rows) ax += sup[r] * x[(r + 1) * w + j];
        CHECK(ax == doctest::Approx(b[r * w + j]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("scalar reductions match direct loops") {
  const auto& k = simd::scalar_kernels();
  for (std::size_t n : {1, 2, 15, 16, 17, 100, 1000, 4099}) {
    const auto x = random_vector(n, 10 + n), y = random_vector(n, 20 + n);
    long double s = 0, d = 0, inc = 0, trap = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s += x[i];
      d += (long double)x[i] * y[i];
      const double c = x[i] - 0.3;
      trap += (i == 0 || i + 1 == n ? 0.5L : 1.0L) * c * c;
      if (i + 1 < n) inc += (long double)(x[i + 1] - x[i]) * (x[i + 1] - x[i]);
    }
    const double scale = double(n);
    CHECK(std::abs(k.sum(x.data(), n) - double(s)) < 1e-14 * scale);
    CHECK(std::abs(k.dot(x.data(), y.data(), n) - double(d)) < 1e-14 * scale);
    CHECK(std::abs(k.sum_sq_increments(x.data(), n) - double(inc)) < 1e-14 * scale);
    if (n >= 2) CHECK(std::abs(k.trapezoid_sq_offset(x.data(), n, 0.3) - double(trap)) < 1e-14 * scale);
  }
}

TEST_CASE("AVX2 row kernels are bit-identical to scalar") {
  const simd::KernelTable* v = simd::avx2_kernels();
  if (!v) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const auto& s = simd::scalar_kernels();
  for (bool periodic : {false, true}) {
    for (std::size_t rows : rows_list) {
      for (std::size_t w : widths) {
        const auto lo = random_vector(rows, 1), di = random_vector(rows, 2), up = random_vector(rows, 3);
        const auto in = random_vector(rows * w, 4 + w);
        std::vector<double> a(rows * w), b(rows * w);
        s.tridiag_apply(lo.data(), di.data(), up.data(), in.data(), a.data(), rows, w, periodic);
        v->tridiag_apply(lo.data(), di.data(), up.data(), in.data(), b.data(), rows, w, periodic);
        CHECK(same_bits(a, b));

        const auto mult = random_vector(rows, 5), inv = random_vector(rows, 6, 0.2, 0.5);
        auto x = in, y = in;
        s.tridiag_solve(mult.data(), inv.data(), up.data(), x.data(), rows, w);
        v->tridiag_solve(mult.data(), inv.data(), up.data(), y.data(), rows, w);
        CHECK(same_bits(x, y));
      }
    }
  }
  for (std::size_t n : {0, 1, 3, 4, 5, 17, 1001}) {
    const auto x = random_vector(n, 30);
    auto a = random_vector(n, 31), b = a;
    s.axpy(0.37, x.data(), a.data(), n);
    v->axpy(0.37, x.data(), b.data(), n);
    CHECK(same_bits(a, b));
  }
}

TEST_CASE("AVX2 reductions agree with scalar to rounding") {
  const simd::KernelTable* v = simd::avx2_kernels();
  if (!v) return;
  const auto& s = simd::scalar_kernels();
  for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 9, 31, 64, 65, 1000, 4097}) {
    const auto x = random_vector(n, 40 + n), y = random_vector(n, 50 + n);
    const double tol = 1e-14 * double(n);
    CHECK(std::abs(s.sum(x.data(), n) - v->sum(x.data(), n)) < tol);
    CHECK(std::abs(s.dot(x.data(), y.data(), n) - v->dot(x.data(), y.data(), n)) < tol);
    CHECK(std::abs(s.sum_sq_increments(x.data(), n) - v->sum_sq_increments(x.data(), n)) < tol);
    if (n >= 2)
      CHECK(std::abs(s.trapezoid_sq_offset(x.data(), n, -0.1) -
                     v->trapezoid_sq_offset(x.data(), n, -0.1)) < tol);
  }
}

TEST_CASE("backend selection") {
  {
    simd::ScopedBackend guard(simd::Backend::scalar);
    CHECK(simd::backend() == simd::Backend::scalar);
    CHECK(&simd::active() == &simd::scalar_kernels());
  }
  if (!simd::avx2_available()) CHECK_THROWS(simd::set_backend(simd::Backend::avx2));
}

TEST_CASE("solver kernels do not depend on the backend") {
  if (!simd::avx2_available()) return;
  const Grid1D g{-1, 1, 48};
  const UnitSystem units{};
  const potential::Harmonic u{2.0, 0.1, 1.0};
  Kernel a, b;
  {
    simd::ScopedBackend guard(simd::Backend::scalar);
    a = kernel(g, u, units, 0.0, 0.1, {0.01, 4});
  }
  {
    simd::ScopedBackend guard(simd::Backend::avx2);
    b = kernel(g, u, units, 0.0, 0.1, {0.01, 4});
  }
  CHECK(same_bits(a.entries, b.entries));

  const Grid1D p{0, 1, 20, Boundary::periodic};
  {
    simd::ScopedBackend guard(simd::Backend::scalar);
    a = kernel(p, u, units, 0.0, 0.1, {0.01, 4});
  }
  {
    simd::ScopedBackend guard(simd::Backend::avx2);
    b = kernel(p, u, units, 0.0, 0.1, {0.01, 4});
  }
  CHECK(same_bits(a.entries, b.entries));
}

}  // TEST_SUITE
