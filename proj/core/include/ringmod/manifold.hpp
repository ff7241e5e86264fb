#pragma once

// Lengths, volumes, sphere areas and distances for a metric on one chart.

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ringmod/grid.hpp"
#include "ringmod/metric.hpp"
#include "ringmod/qfield.hpp"

namespace ringmod {

/// Discrete curve: straight segments between consecutive vertices, plus a
/// closing segment when `closed`.
struct CurvePolyline {
  std::vector<Point> vertices;
  bool closed = false;

  std::size_t segment_count() const noexcept;
  /// Fewer than two vertices, or two consecutive vertices coincide.
  bool degenerate() const;
};

struct LengthResult {
  double length = 0.0;
  bool degenerate = false;
};

/// Midpoint-rule metric length: sum of sqrt(d^T g(mid) d) over segments.
/// Degenerate polylines yield zero with the flag set. Throws DomainError if a
/// vertex leaves the grid.
LengthResult curve_length(const MetricField& field, const CurvePolyline& curve);

/// Set of grid cells, stored as a mask over the cell index space.
class CellRegion {
 public:
  explicit CellRegion(const ChartGrid& grid) : mask_(grid.cell_count(), 0) {}

  static CellRegion all(const ChartGrid& grid);
  /// Cells whose center satisfies `inside`.
  static CellRegion from_predicate(const ChartGrid& grid, const std::function<bool(std::span<const double>)>& inside);

  void insert(std::size_t cell) { mask_.at(cell) = 1; }
  bool contains(std::size_t cell) const { return mask_[cell] != 0; }
  std::size_t size() const;
  std::size_t capacity() const noexcept { return mask_.size(); }
  std::vector<std::size_t> cells() const;

 private:
  std::vector<char> mask_;
};

/// Sum over cells of sqrt(det g(center)) * cell volume.
double volume_measure(const MetricField& field, const CellRegion& region);

enum class DistanceMode { kChartEuclidean, kGeodesic };

struct SphereSpec {
  Point center;
  double radius = 0.0;
  DistanceMode mode = DistanceMode::kChartEuclidean;
};

/// Angular resolution control: 2^k points per angle, doubled from
/// `min_points` until successive values agree within `rel_tol`.
struct SphereQuadrature {
  int min_points = 16;
  int max_points = 1024;
  double rel_tol = 0.005;
};

/// Integral of Q over S(center, radius) against the induced area element
/// sqrt(det g*), g*_ab = g_ij dx^i/du^a dx^j/du^b, in hyperspherical angles.
/// Q defaults to 1. Geodesic mode integrates over a level set of the grid
/// distance field (coarea formula with a hat kernel of width 2h).
double surface_measure(const MetricField& field, const SphereSpec& sphere, const SphereQuadrature& quad = {});
double surface_measure(const MetricField& field, const SphereSpec& sphere, const QField& q,
                       const SphereQuadrature& quad = {});

/// Integral of Q * sqrt(det g) over the chart-Euclidean sphere |x - c| = t
/// against the Euclidean area element: the shell density of the volume
/// measure, so that the integral over an annulus of a radial function is the
/// t-integral of this quantity. Q defaults to 1.
double shell_volume_density(const MetricField& field, std::span<const double> center, double t, const QField* q,
                            const SphereQuadrature& quad = {});

/// Integral over r_lo < |x - c| < r_hi of Q(x) * radial(|x - c|) dv, by
/// log-spaced Gauss panels in the radius (r_lo = 0 handled by a geometric
/// core of 40 halvings).
double radial_volume_integral(const MetricField& field, std::span<const double> center, double r_lo, double r_hi,
                              const std::function<double(double)>& radial, const QField* q = nullptr,
                              const SphereQuadrature& quad = {}, int panels_per_decade = 4);

/// Worst-case ratio of the full-stencil grid path length to the straight
/// Euclidean length, sqrt(4 - 2 sqrt 2), attained at 22.5 degrees off axis.
inline constexpr double kStencilAnisotropy = 1.0823922002923940;

/// Shortest-path distance from a source point to every grid node over the
/// full (3^n - 1)-neighbour stencil, edge weight = metric segment length.
class DistanceField {
 public:
  static DistanceField from_point(const MetricField& field, std::span<const double> source,
                                  const std::vector<char>* blocked = nullptr);

  const ChartGrid& grid() const noexcept { return grid_; }
  double at_node(std::size_t node) const { return dist_[node]; }
  /// Distance to an arbitrary point: best exit through a corner of its cell.
  double to_point(const MetricField& field, std::span<const double> p) const;
  /// Multilinear interpolation of node values.
  double interpolate(std::span<const double> p) const;
  const std::vector<double>& values() const noexcept { return dist_; }

 private:
  DistanceField(ChartGrid grid, Point source) : grid_(std::move(grid)), source_(std::move(source)) {}
  ChartGrid grid_;
  Point source_;
  std::vector<double> dist_;
};

/// Grid-graph geodesic distance; +inf when the points are disconnected by
/// `blocked` nodes. Overestimates the true distance by at most
/// kStencilAnisotropy for constant metrics.
double geodesic_distance(const MetricField& field, std::span<const double> p, std::span<const double> q,
                         const std::vector<char>* blocked = nullptr);

struct RefinedDistance {
  double value = 0.0;
  int levels = 0;
  bool converged = false;
};

/// Halves the spacing until two successive estimates agree within `rel_tol`.
RefinedDistance geodesic_distance_refined(const MetricField& field, std::span<const double> p,
                                          std::span<const double> q, int max_levels = 3, double rel_tol = 0.02);

struct AhlforsReport {
  double q_fit = 0.0;      ///< slope of log mu(B) against log R
  double prefactor = 0.0;  ///< exp(intercept)
  double c_fit = 0.0;      ///< smallest C with R^q/C <= mu <= C R^q on the samples
  double residual = 0.0;   ///< RMS residual of the log-log fit
  bool consistent_with_dim = false;  ///< |q_fit - n| <= 0.05 n
  std::vector<double> radii;
  std::vector<double> volumes;
};

/// Volume of B(center, R); chart-Euclidean balls via radial quadrature,
/// geodesic balls via grid cells under the distance field.
double ball_volume(const MetricField& field, std::span<const double> center, double radius,
                   DistanceMode mode = DistanceMode::kChartEuclidean);

/// Least-squares Ahlfors regularity fit. Needs >= 3 radii.
AhlforsReport ahlfors_probe(const MetricField& field, std::span<const double> center, std::span<const double> radii,
                            DistanceMode mode = DistanceMode::kChartEuclidean);

}  // namespace ringmod
