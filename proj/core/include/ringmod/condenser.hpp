#pragma once

// Condensers E = (A, C) on a chart grid and their n-capacity.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringmod/curve_modulus.hpp"

namespace ringmod {

enum class NodeLabel : std::uint8_t {
  kOutside,  ///< grid boundary or outside A: u = 0
  kFree,     ///< in A \ C: unknown
  kPlate,    ///< in C: u = 1
};

/// Node-labelled condenser. A is open: grid-boundary nodes never belong to
/// it. Construction throws DegenerateCondenserError when C is empty or a C
/// node is not an A node.
class Condenser {
 public:
  using Predicate = std::function<bool(std::span<const double>)>;

  /// A = {|x - c| < r_outer}, C = {|x - c| <= r_inner} (chart-Euclidean).
  static Condenser round(const ChartGrid& grid, Point center, double r_inner, double r_outer);
  /// Axis-aligned boxes: A = open box (a_lo, a_hi), C = closed box [c_lo, c_hi].
  static Condenser box(const ChartGrid& grid, const Point& a_lo, const Point& a_hi, const Point& c_lo,
                       const Point& c_hi);
  /// Nodes where `in_a` holds form A, nodes where `in_c` holds form C.
  static Condenser from_predicates(const ChartGrid& grid, const Predicate& in_a, const Predicate& in_c,
                                   std::string description = "predicate");
  /// A = interior of the union of the closed cells `a`, C = union of the
  /// closed cells `c`.
  static Condenser from_cells(const ChartGrid& grid, const CellRegion& a, const CellRegion& c);

  const ChartGrid& grid() const noexcept { return grid_; }
  const std::vector<NodeLabel>& labels() const noexcept { return labels_; }
  NodeLabel label(std::size_t node) const { return labels_[node]; }
  bool in_a(std::size_t node) const { return labels_[node] != NodeLabel::kOutside; }
  bool in_c(std::size_t node) const { return labels_[node] == NodeLabel::kPlate; }
  std::size_t plate_nodes() const;
  std::size_t free_nodes() const;
  const std::string& description() const noexcept { return description_; }

  /// Present for round condensers.
  const std::optional<RingSpec>& round_ring() const noexcept { return ring_; }

 private:
  Condenser(ChartGrid grid, std::vector<NodeLabel> labels, std::string description);
  ChartGrid grid_;
  std::vector<NodeLabel> labels_;
  std::string description_;
  std::optional<RingSpec> ring_;
};

/// Node values of a discrete potential on the condenser's grid.
struct PotentialField {
  std::vector<double> values;
};

struct CapacityOptions {
  int max_outer = 500;          ///< IRLS outer iterations (n > 2)
  double damping = 0.5;         ///< u <- (1 - damping) u + damping u_solve
  double regularization = 1e-8; ///< weights (|grad u|^2 + reg)^((n-2)/2)
  double energy_rel_tol = 1e-7; ///< outer stop: relative energy change
  double cg_rel_tol = 1e-10;
  int cg_max_iterations = 20000;
};

struct CapacityResult {
  double value = 0.0;
  int outer_iterations = 0;
  long cg_iterations = 0;
  bool converged = false;
  PotentialField potential;
};

/// Minimises sum over simplices of vol * sqrt(det g) * (grad u^T g^-1 grad u)^(n/2)
/// over continuous piecewise-linear u on the Kuhn triangulation of the grid,
/// with u = 1 on C and u = 0 off A. The metric is frozen per cell at its
/// center. n = 2 is one linear solve; n > 2 runs damped IRLS with
/// truncation to [0, 1] after every outer step.
CapacityResult capacity(const Condenser& cond, const MetricField& field, const CapacityOptions& opts = {});

/// Discrete n-energy of an arbitrary node function (same functional).
double potential_energy(const MetricField& field, std::span<const double> u);

/// Escape curves from C to the boundary of A. Round condensers give the
/// radial ring sample between the two spheres; otherwise rays from the
/// centroid of C start at their last point in C and stop at the last point
/// before leaving A (nearest-node membership, step h/4).
CurveFamily condenser_curve_family(const Condenser& cond, const MetricField& field, int count = 0,
                                   std::uint64_t seed = 0);

struct CapModulusOptions {
  double tol = 0.05;  ///< relative to the bracket midpoint
  CapacityOptions capacity;
  BracketPlan bracket;
};

struct CapModulusReport {
  CapacityResult cap;
  ModulusBracket bracket;
  double tol_abs = 0.0;
  bool agree = false;
  double midpoint() const { return 0.5 * (bracket.lower + bracket.upper); }
};

/// Brackets M(Gamma_E) and checks cap E inside [lower - tol, upper + tol].
/// Upper side: the ring candidate for round condensers, otherwise the energy
/// of the computed potential (rho = |grad u| is admissible for Gamma_E).
/// Lower side: the finite program on the sampled escape family.
CapModulusReport cap_equals_modulus_check(const Condenser& cond, const MetricField& field,
                                          const CapModulusOptions& opts = {});

}  // namespace ringmod
