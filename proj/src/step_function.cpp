#include "ltroc/step_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace ltroc {

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values, double left_value)
    : knots_(std::move(knots)), values_(std::move(values)), left_value_(left_value) {
  if (knots_.size() != values_.size()) {
    throw std::invalid_argument("StepFunction: knots and values differ in length");
  }
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k - 1] < knots_[k])) {
      throw std::invalid_argument("StepFunction: knots must be strictly increasing");
    }
  }
}

double StepFunction::operator()(double t) const {
  // last knot <= t
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return left_value_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  // last knot < t
  auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return left_value_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

}  // namespace ltroc
