#pragma once

#include <span>
#include <vector>

namespace ltroc {

/// Right-continuous piecewise-constant function.
///
/// `values[k]` holds on [knots[k], knots[k+1]); `left_value` holds before the
/// first knot. Knots are strictly increasing. Left limits f(t-) are computed
/// from the knot table, never by shifting t.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double left_value);

  /// Constant function with no knots.
  static StepFunction constant(double value) { return StepFunction({}, {}, value); }

  double operator()(double t) const;
  double left_limit(double t) const;

  /// Size of the jump at t, f(t) - f(t-).
  double jump(double t) const { return (*this)(t) - left_limit(t); }

  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  double left_value() const { return left_value_; }
  /// Value after the last knot.
  double tail_value() const { return values_.empty() ? left_value_ : values_.back(); }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double left_value_ = 0.0;
};

}  // namespace ltroc
