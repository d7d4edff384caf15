#pragma once

#include <span>

namespace ltroc::kernels {

enum class PairOp { Greater, LessEqual, Less };

// sum_i sum_j a[i] * b[j] * 1(xa[i] OP xb[j])
using PairSumFn = double (*)(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                             std::span<const double> b, PairOp op);

double pair_sum_scalar(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                       std::span<const double> b, PairOp op);
double pair_sum_avx2(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                     std::span<const double> b, PairOp op);

enum class SimdLevel { Scalar, Avx2 };

bool cpu_has_avx2();
/// Level used by pair_sum. Starts at the best supported level unless the
/// environment sets LTROC_SIMD=scalar.
SimdLevel active_simd_level();
/// Requests a level; falls back to scalar when the CPU lacks AVX2.
void set_simd_level(SimdLevel level);

double pair_sum(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                std::span<const double> b, PairOp op);

}  // namespace ltroc::kernels
