#include <atomic>

#if defined(__x86_64__) || defined(_M_X64)
#include <xmmintrin.h>
#endif

#include "kernels_internal.hpp"
#include "paththerm/error.hpp"

namespace paththerm::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{avx2_available() ? detail::avx2_table_if_compiled()
                                                                : &scalar_kernels()};
  return table;
}

}  // namespace

bool avx2_available() {
  static const bool ok = detail::avx2_table_if_compiled() != nullptr && cpu_has_avx2();
  return ok;
}

const KernelTable* avx2_kernels() {
  return avx2_available() ? detail::avx2_table_if_compiled() : nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Backend backend() { return &active() == &scalar_kernels() ? Backend::scalar : Backend::avx2; }

void set_backend(Backend b) {
  if (b == Backend::scalar) {
    current().store(&scalar_kernels(), std::memory_order_release);
    return;
  }
  if (!avx2_available()) throw InvalidArgument("AVX2 kernels are not available on this CPU");
  current().store(detail::avx2_table_if_compiled(), std::memory_order_release);
}

#if defined(__x86_64__) || defined(_M_X64)
FlushDenormals::FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040U); }
FlushDenormals::~FlushDenormals() { _mm_setcsr(saved_); }
#else
FlushDenormals::FlushDenormals() : saved_(0) {}
FlushDenormals::~FlushDenormals() = default;
#endif

}  // namespace paththerm::simd
