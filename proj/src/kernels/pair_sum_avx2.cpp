#include "ltroc/kernels/pair_sum.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define LTROC_X86 1
#endif

namespace ltroc::kernels {

#ifdef LTROC_X86

namespace {

template <int Pred>
__attribute__((target("avx2"))) double sweep_avx2(std::span<const double> xa, std::span<const double> a,
                                                  std::span<const double> xb, std::span<const double> b) {
  const std::size_t m = xb.size(), m4 = m & ~std::size_t{3};
  double total = 0.0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    const __m256d xi = _mm256_set1_pd(xa[i]);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < m4; j += 4) {
      const __m256d mask = _mm256_cmp_pd(xi, _mm256_loadu_pd(xb.data() + j), Pred);
      acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(b.data() + j)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double row = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (std::size_t j = m4; j < m; ++j) {
      const double u = xa[i], v = xb[j];
      bool hit = Pred == _CMP_GT_OQ ? u > v : Pred == _CMP_LE_OQ ? u <= v : u < v;
      if (hit) row += b[j];
    }
    total += a[i] * row;
  }
  return total;
}

}  // namespace

double pair_sum_avx2(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                     std::span<const double> b, PairOp op) {
  switch (op) {
    case PairOp::Greater:
      return sweep_avx2<_CMP_GT_OQ>(xa, a, xb, b);
    case PairOp::LessEqual:
      return sweep_avx2<_CMP_LE_OQ>(xa, a, xb, b);
    case PairOp::Less:
      return sweep_avx2<_CMP_LT_OQ>(xa, a, xb, b);
  }
  return 0.0;
}

#else

double pair_sum_avx2(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                     std::span<const double> b, PairOp op) {
  return pair_sum_scalar(xa, a, xb, b, op);
}

#endif

}  // namespace ltroc::kernels
