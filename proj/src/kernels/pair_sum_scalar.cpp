#include "ltroc/kernels/pair_sum.hpp"

namespace ltroc::kernels {

namespace {

template <class Cmp>
double sweep(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
             std::span<const double> b, Cmp cmp) {
  double total = 0.0;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < xb.size(); ++j) {
      if (cmp(xa[i], xb[j])) row += b[j];
    }
    total += a[i] * row;
  }
  return total;
}

}  // namespace

double pair_sum_scalar(std::span<const double> xa, std::span<const double> a, std::span<const double> xb,
                       std::span<const double> b, PairOp op) {
  switch (op) {
    case PairOp::Greater:
      return sweep(xa, a, xb, b, [](double u, double v) { return u > v; });
    case PairOp::LessEqual:
      return sweep(xa, a, xb, b, [](double u, double v) { return u <= v; });
    case PairOp::Less:
      return sweep(xa, a, xb, b, [](double u, double v) { return u < v; });
  }
  return 0.0;
}

}  // namespace ltroc::kernels
