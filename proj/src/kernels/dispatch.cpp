#include <atomic>
#include <cstdlib>
#include <cstring>

#include "ltroc/kernels/pair_sum.hpp"

namespace ltroc::kernels {

namespace {

SimdLevel initial_level() {
  const char* env = std::getenv("LTROC_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return SimdLevel::Scalar;
  return cpu_has_avx2() ? SimdLevel::Avx2 : SimdLevel::Scalar;
}

std::atomic<SimdLevel>& level() {
  static std::atomic<SimdLevel> current{initial_level()};
  return current;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

SimdLevel active_simd_level() { return level().load(std::memory_order_relaxed); }

void set_simd_level(SimdLevel requested) {
  if (requested == SimdLevel::Avx2 && !cpu_has_avx2()) requested = SimdLevel::Scalar;
  level().store(requested, std::memory_order_relaxed);
}

double pair_sum(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                std::span<const double> b, PairOp op) {
  if (active_simd_level() == SimdLevel::Avx2) return pair_sum_avx2(xa, a, xb, b, op);
  return pair_sum_scalar(xa, a, xb, b, op);
}

}  // namespace ltroc::kernels
