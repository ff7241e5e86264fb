#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ringmod/expression.hpp"
#include "ringmod/grid.hpp"

namespace ringmod {

enum class MetricKind { kEuclidean, kConformal, kMatrix, kSampled };

/// Sampled eigenvalue range of g over a set of nodes.
struct EigenRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t samples = 0;
};

/// Riemannian metric g_ij on a single chart grid.
///
/// Construction samples g at every grid node and throws
/// MetricIntegrityError if any sample is asymmetric (relative 1e-12) or not
/// positive definite. Instances are immutable and cheap to copy.
class MetricField {
 public:
  using ScalarFn = std::function<double(std::span<const double>)>;
  using MatrixFn = std::function<void(std::span<const double>, Eigen::MatrixXd&)>;

  static MetricField euclidean(ChartGrid grid);
  /// g_ij = factor(p) * delta_ij.
  static MetricField conformal(ChartGrid grid, ScalarFn factor, std::string description = "conformal");
  static MetricField conformal(ChartGrid grid, const Expression& factor);
  static MetricField matrix(ChartGrid grid, MatrixFn fn, std::string description = "matrix");
  /// Row-major n*n table of expressions over x1..xn.
  static MetricField matrix(ChartGrid grid, const std::vector<Expression>& table);
  /// Node samples, multilinearly interpolated between nodes.
  static MetricField sampled(ChartGrid grid, std::vector<Eigen::MatrixXd> node_values);

  const ChartGrid& grid() const noexcept;
  int dim() const noexcept { return grid().dim(); }
  MetricKind kind() const noexcept;
  const std::string& description() const noexcept;
  bool is_euclidean() const noexcept { return kind() == MetricKind::kEuclidean; }

  /// Checked evaluation: DomainError outside the grid, MetricIntegrityError
  /// for a non-SPD value.
  Eigen::MatrixXd at(std::span<const double> p) const;

  /// Unchecked evaluation for inner loops. `out` must be dim x dim.
  void evaluate(std::span<const double> p, Eigen::MatrixXd& out) const;

  /// sqrt(det g(p)), unchecked.
  double sqrt_det(std::span<const double> p) const;
  /// Smallest eigenvalue of g(p), unchecked.
  double min_eigenvalue(std::span<const double> p) const;
  /// Metric length sqrt(d^T g(mid) d) of the straight segment a -> b.
  double segment_length(std::span<const double> a, std::span<const double> b) const;

  /// Eigenvalue range over nodes within chart distance `radius` of `center`.
  EigenRange eigen_range_near(std::span<const double> center, double radius) const;

  /// The same metric on another grid (used for refinement). Sampled fields
  /// are interpolated onto the new nodes.
  MetricField regrid(ChartGrid grid) const;

 private:
  struct Impl;
  explicit MetricField(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Throws MetricIntegrityError unless `g` is symmetric (relative 1e-12) and
/// positive definite.
void check_spd(const Eigen::MatrixXd& g, std::span<const double> where);

}  // namespace ringmod
