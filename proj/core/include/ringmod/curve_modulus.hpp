#pragma once

// Conformal modulus M(Gamma) of sampled curve families: a finite convex
// program for the lower side, an admissible density for the upper side.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringmod/manifold.hpp"

namespace ringmod {

/// Ring A(r1, r2, x0) = {r1 < d(x, x0) < r2}.
struct RingSpec {
  Point center;
  double r1 = 0.0;
  double r2 = 0.0;
  DistanceMode mode = DistanceMode::kChartEuclidean;

  /// Throws DomainError unless 0 < r1 < r2 and the closed ball B(x0, r2)
  /// lies in the grid.
  void validate(const ChartGrid& grid) const;
};

enum class FamilyKind { kEmpty, kRingRadial, kRingSpiral, kCondenserEscape, kUserSupplied };

const char* to_string(FamilyKind kind);

struct CurveFamily {
  std::vector<CurvePolyline> curves;
  FamilyKind kind = FamilyKind::kUserSupplied;
  std::optional<RingSpec> ring;
  int perturbation = 0;
  std::uint64_t seed = 0;

  static CurveFamily empty() { return CurveFamily{{}, FamilyKind::kEmpty, std::nullopt, 0, 0}; }
  bool is_empty() const noexcept { return curves.empty(); }
  std::size_t size() const noexcept { return curves.size(); }
};

/// Nonnegative density, constant on each grid cell.
struct DensityField {
  ChartGrid grid;
  std::vector<double> values;

  static DensityField zero(const ChartGrid& grid);
  static DensityField from_function(const ChartGrid& grid, const std::function<double(std::span<const double>)>& rho);
  double at_cell(std::size_t cell) const { return values[cell]; }
};

/// Line integral of a cell density along a curve, segment-midpoint lookup.
double line_integral(const MetricField& field, const DensityField& rho, const CurvePolyline& curve);

/// `count` unit directions in R^dim: equal angles in 2-D, a Fibonacci
/// lattice in 3-D, seeded Gaussian samples above. `jitter` rotates the set
/// by a seeded random offset (2-D and 3-D).
std::vector<Point> sphere_directions(int dim, int count, bool jitter, std::uint64_t seed);

/// `count` curves joining S1 and S2 inside the ring. Level 0: straight
/// radial segments at stratified directions. Level >= 1: directions are
/// jittered and alternate curves are bent by piecewise-linear tangential
/// deflections of amplitude <= (r2 - r1)/4 (level 2 adds more knots and
/// spirals). Vertices are spaced at most h/4 apart. Deterministic in `seed`.
CurveFamily sample_ring_curves(const MetricField& field, const RingSpec& ring, int count, int perturbation = 0,
                               std::uint64_t seed = 0);

struct AdmissibilityReport {
  bool admissible = true;
  std::optional<std::size_t> worst_curve;  ///< index of the smallest line integral
  double worst_integral = 0.0;
};

/// True iff every curve has line integral >= 1 - tol. Vacuously true for
/// the empty family.
AdmissibilityReport is_admissible(const MetricField& field, const DensityField& rho, const CurveFamily& family,
                                  double tol = 1e-3);

struct SolverOptions {
  int max_sweeps = 10000;     ///< full passes over the constraints
  double rel_gap = 1e-4;      ///< stop when (primal - dual) / primal < rel_gap
};

struct ModulusLowerResult {
  double value = 0.0;   ///< dual objective: certified lower bound of the discrete program
  double primal = 0.0;  ///< objective at the rescaled feasible density
  double rel_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t curves = 0;
  std::size_t cells = 0;
  std::size_t skipped_degenerate = 0;
  DensityField density;  ///< feasible (admissible) density attaining `primal`
};

/// Minimises sum_c rho_c^n sqrt(det g_c) |cell| subject to a line integral
/// >= 1 along every sampled curve, by exact coordinate ascent on the
/// Lagrange dual. Returns 0 for the empty family.
ModulusLowerResult modulus_lower(const CurveFamily& family, const MetricField& field, const SolverOptions& opts = {});

/// Certified lower bound for the full ring family from the flow through its
/// radial segments: by Hölder, for any measure m on directions,
/// M >= (int m)^n / ||sigma_m||^n_{n/(n-1)}, maximised in closed form by
/// m = K^(1-n), giving int_{S^{n-1}} K(theta)^(1-n) dtheta with
/// K(theta) = int_{r1}^{r2} l^{n'} det(g)^{(1-n')/2} dt/t, l = |theta|_g.
/// Exact for Euclidean and conformally flat radial metrics. Chart-Euclidean
/// rings only.
double radial_flux_lower(const RingSpec& ring, const MetricField& field);

struct ModulusUpperResult {
  double value = 0.0;
  bool admissible = true;
  bool certified_analytically = false;
  AdmissibilityReport check;  ///< dense-sample check (user and geodesic candidates)
};

/// Upper bound from the standard extremal density
/// rho(x) = 1 / (d(x, x0) log(r2/r1) sqrt(lambda_min g(x))) on the ring,
/// admissible for every curve joining S1 and S2 (chart-Euclidean mode).
/// Geodesic mode uses 1/(d log(r2/r1)) with a numerical certificate.
ModulusUpperResult modulus_upper(const RingSpec& ring, const MetricField& field, const SphereQuadrature& quad = {});

/// Upper bound from a user density; rejected (admissible = false, value =
/// +inf) unless it passes the dense admissibility check at `tol`.
ModulusUpperResult modulus_upper(const RingSpec& ring, const MetricField& field, const DensityField& candidate,
                                 double tol = 1e-3, std::uint64_t seed = 0);

struct BracketPlan {
  int curve_count = 0;  ///< 0 = derived from the grid spacing
  int perturbation = 0;
  std::uint64_t seed = 0;
  SolverOptions solver;
  SphereQuadrature quad;
};

/// `lower` is the smaller of the finite-program dual and the radial flux
/// bound, so it stays a certified lower bound when the cell discretisation
/// biases the finite program upward.
struct ModulusBracket {
  double lower = 0.0;
  double upper = 0.0;
  double program_lower = 0.0;  ///< dual value of the sampled finite program
  double flux_lower = 0.0;     ///< radial flux bound (+inf when not applicable)
  int iterations = 0;
  bool lower_converged = false;
  bool upper_certified = false;
  int curve_count = 0;
  double width() const { return upper - lower; }
  /// Endpoints are widened by a relative 1e-9 to absorb quadrature rounding.
  bool ordered() const { return lower <= upper * (1.0 + 1e-9); }
  bool contains(double v) const { return lower * (1.0 - 1e-9) <= v && v <= upper * (1.0 + 1e-9); }
};

/// Default number of sampled ring curves for a grid: enough to cross every
/// cell on the outer sphere.
int default_ring_curve_count(const ChartGrid& grid, const RingSpec& ring);

ModulusBracket modulus_bracket(const RingSpec& ring, const MetricField& field, const BracketPlan& plan = {});

struct AxiomCheck {
  std::string axiom;   ///< empty | monotone | subadditive | minorized
  std::string detail;
  double lhs = 0.0;    ///< must satisfy lhs <= rhs + tol
  double rhs = 0.0;
  bool passed = false;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  bool all_passed() const;
  std::size_t failures() const;
};

struct AxiomOptions {
  double tol = 1e-3;
  std::uint64_t seed = 0;
  SolverOptions solver{20000, 1e-7};
};

/// Checks, on each family and on neighbouring pairs: M(empty) = 0;
/// M(first half) <= M(family); M(family) <= M(part a) + M(part b) for a
/// seeded random split; M(union) <= sum; and M(extended) <= M(family) where
/// every curve is prolonged past its end point.
AxiomReport modulus_axiom_suite(const MetricField& field, std::span<const CurveFamily> families,
                                const AxiomOptions& opts = {});

/// Each curve prolonged along its last segment by `extra` chart units (clipped
/// to the grid). The original vertices are kept, so every new curve has the
/// old one as a subcurve.
CurveFamily extend_curves(const CurveFamily& family, const ChartGrid& grid, double extra);

}  // namespace ringmod
