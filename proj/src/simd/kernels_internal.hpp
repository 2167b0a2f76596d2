#pragma once

#include "paththerm/simd/kernels.hpp"

namespace paththerm::simd::detail {

/// Compiled-in AVX2 table, or nullptr on targets without x86 intrinsics.
/// Does not check the running CPU.
const KernelTable* avx2_table_if_compiled();

}  // namespace paththerm::simd::detail
