#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ltroc/kernels/pair_sum.hpp"

using namespace ltroc::kernels;

namespace {

// Direct double loop with a long double accumulator, order-independent
// enough to serve as a reference for both kernels.
long double reference(const std::vector<double>& xa, const std::vector<double>& a, const std::vector<double>& xb,
                      const std::vector<double>& b, PairOp op) {
  long double s = 0;
  for (std::size_t i = 0; i < xa.size(); ++i)
    for (std::size_t j = 0; j < xb.size(); ++j) {
      const bool hit = op == PairOp::Greater ? xa[i] > xb[j] : op == PairOp::LessEqual ? xa[i] <= xb[j] : xa[i] < xb[j];
      if (hit) s += static_cast<long double>(a[i]) * b[j];
    }
  return s;
}

struct LevelGuard {
  SimdLevel saved = active_simd_level();
  ~LevelGuard() { set_simd_level(saved); }
};

}  // namespace

TEST_CASE("scalar and AVX2 pair sums agree, including tails and ties") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(0, 37), level(0, 5);
  for (int rep = 0; rep < 300; ++rep) {
    const int na = size(rng), nb = size(rng);
    const bool ties = rep % 3 == 0;
    std::vector<double> xa(na), a(na), xb(nb), b(nb);
    for (int i = 0; i < na; ++i) {
      xa[i] = ties ? level(rng) : u(rng);
      a[i] = u(rng);
    }
    for (int j = 0; j < nb; ++j) {
      xb[j] = ties ? level(rng) : u(rng);
      b[j] = u(rng);
    }
    for (PairOp op : {PairOp::Greater, PairOp::LessEqual, PairOp::Less}) {
      const double s = pair_sum_scalar(xa, a, xb, b, op);
      const double v = pair_sum_avx2(xa, a, xb, b, op);
      const double want = static_cast<double>(reference(xa, a, xb, b, op));
      CHECK(s == doctest::Approx(want).epsilon(1e-13));
      CHECK(v == doctest::Approx(s).epsilon(1e-13));
    }
  }
}

TEST_CASE("infinite thresholds behave like ordinary values") {
  const double inf = INFINITY;
  const std::vector<double> xa = {-inf, 0.0, inf}, a = {1, 2, 4}, xb = {0.0, inf, -inf, 1.0, 2.0}, b = {1, 1, 1, 1, 1};
  for (PairOp op : {PairOp::Greater, PairOp::LessEqual, PairOp::Less}) {
    CHECK(pair_sum_avx2(xa, a, xb, b, op) == pair_sum_scalar(xa, a, xb, b, op));
  }
  CHECK(pair_sum_scalar(xa, a, xb, b, PairOp::Greater) == 2 * 1 + 4 * 4);
}

TEST_CASE("runtime dispatch follows the requested level") {
  LevelGuard guard;
  const std::vector<double> x = {0.1, 0.5, 0.9, 0.3, 0.7}, w = {1, 2, 3, 4, 5};
  set_simd_level(SimdLevel::Scalar);
  CHECK(active_simd_level() == SimdLevel::Scalar);
  const double s = pair_sum(x, w, x, w, PairOp::Greater);
  set_simd_level(SimdLevel::Avx2);
  CHECK(active_simd_level() == (cpu_has_avx2() ? SimdLevel::Avx2 : SimdLevel::Scalar));
  CHECK(pair_sum(x, w, x, w, PairOp::Greater) == doctest::Approx(s).epsilon(1e-15));
  CHECK(s == pair_sum_scalar(x, w, x, w, PairOp::Greater));
}
