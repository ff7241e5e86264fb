#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ringmod/expression.hpp"
#include "ringmod/grid.hpp"

namespace ringmod {

/// Nonnegative measurable weight Q on the chart, values in [0, +inf].
///
/// `singular_points` marks where the evaluator may be infinite or undefined;
/// `integrable` says whether those singularities are locally integrable.
class QField {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  QField(Fn fn, std::string description, std::vector<Point> singular_points = {}, bool integrable = true);

  static QField constant(double c);
  /// Q given by an expression over x1..x`dim`.
  static QField expression(const Expression& expr, std::vector<Point> singular_points = {}, bool integrable = true);

  double operator()(std::span<const double> p) const { return (*fn_)(p); }

  const std::string& description() const noexcept { return description_; }
  const std::vector<Point>& singular_points() const noexcept { return singular_; }
  bool integrable() const noexcept { return integrable_; }
  bool is_constant() const noexcept { return constant_; }
  double constant_value() const noexcept { return constant_value_; }

  /// s * Q.
  QField scaled(double s) const;

 private:
  std::shared_ptr<const Fn> fn_;
  std::string description_;
  std::vector<Point> singular_;
  bool integrable_ = true;
  bool constant_ = false;
  double constant_value_ = 0.0;
};

}  // namespace ringmod
