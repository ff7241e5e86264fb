#pragma once

// Equicontinuity certificates for ring Q-mappings at a point, and an
// empirical check of the ring Q-inequality for concrete mappings.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringmod/curve_modulus.hpp"
#include "ringmod/expression.hpp"
#include "ringmod/q_analysis.hpp"

namespace ringmod {

/// Loewner constant shipped with the library. The largest ratio
/// min(diam) / (R M) seen on default_loewner_fixtures was 4.72 (space, 64^3
/// cells, 16 points per side); the ratio still creeps up under refinement
/// because a finite curve sample thins out, so the value carries a factor 2.
inline constexpr double kCalibratedLoewnerConstant = 10.0;

/// Ball B_R in the target, a continuum K of diameter diam_K outside the
/// images, the regularity exponent Q~ of the target and the Loewner constant.
struct TargetGeometry {
  int dim = 2;
  double R = 1.0;
  double diam_K = 1.0;
  double q_tilde = 0.0;  ///< 0 selects dim
  double C_loewner = kCalibratedLoewnerConstant;

  /// Throws DomainError unless R > 0, 0 < diam_K <= 2R and C_loewner >= 1.
  void validate() const;
  double exponent() const noexcept { return q_tilde > 0.0 ? q_tilde : static_cast<double>(dim); }
  /// C * R^(1 + n - Q~).
  double scale() const;
};

/// min(diam_E, diam_F) / (C R^(1 + n - Q~)). Throws DegenerateContinuumError
/// for a nonpositive diameter.
double loewner_lower_bound(double diam_E, double diam_F, double R, const TargetGeometry& geom);

struct DiameterBound {
  double value = 0.0;         ///< C R^(1 + n - Q~) * cap_bound
  bool min_attained = false;  ///< value < diam_K, so min{diam f(C), diam K} = diam f(C)
};

/// Inverts the Loewner bound: min{diam f(C), diam K} <= C R cap. When the
/// flag is false the bound says nothing about diam f(C).
DiameterBound diameter_bound(double cap_bound, const TargetGeometry& geom);

// ------------------------------------------------------------ mappings

enum class MappingKind { kIdentity, kRadialStretch, kWinding, kLinear, kUser };
const char* to_string(MappingKind kind);

/// Chart map f with an analytic Jacobian for the shipped kinds and central
/// differences for user expressions.
class MappingSpec {
 public:
  using MapFn = std::function<void(std::span<const double>, std::span<double>)>;
  using JacobianFn = std::function<void(std::span<const double>, Eigen::MatrixXd&)>;

  MappingSpec(int dim, MapFn map, std::optional<JacobianFn> jacobian, MappingKind kind, std::string description,
              double parameter = 0.0);

  static MappingSpec identity(int dim);
  /// f(x) = c + (x - c) |x - c|^(alpha - 1), alpha > 0.
  static MappingSpec radial_stretch(int dim, double alpha, Point center = {});
  /// Planar z -> c + (z - c)^k, k >= 1.
  static MappingSpec winding(int k, Point center = {});
  /// f(x) = A x with A invertible.
  static MappingSpec linear(const Eigen::MatrixXd& a);
  /// One expression over x1..xn per target coordinate.
  static MappingSpec user(const std::vector<Expression>& components);

  int dim() const noexcept { return dim_; }
  MappingKind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }
  const std::string& description() const noexcept { return description_; }
  bool analytic_jacobian() const noexcept { return jacobian_.has_value(); }

  Point operator()(std::span<const double> x) const;
  /// Analytic when available, otherwise central differences with step
  /// 1e-6 * max(1, |x_i|).
  Eigen::MatrixXd jacobian(std::span<const double> x) const;

 private:
  int dim_;
  MapFn map_;
  std::optional<JacobianFn> jacobian_;
  MappingKind kind_;
  std::string description_;
  double parameter_;
};

/// Outer dilatation |Df|^n / J at x: |Df| is the operator norm from (T_x, g)
/// to the Euclidean target and J = |det Df| / sqrt(det g). +inf where the
/// Jacobian is not finite or degenerate.
double outer_dilatation(const MappingSpec& f, const MetricField& field, std::span<const double> x);

/// Q = K_O^(n-1). Grid nodes with a degenerate or non-finite Jacobian are
/// listed as singular points of the returned field.
QField dilatation_field(const MappingSpec& f, const MetricField& field);

// ------------------------------------------------------------ ring Q-inequality

/// Radial weight eta on (r1, r2).
struct EtaFunction {
  std::function<double(double)> eval;
  std::string description;

  /// 1 / (t log(r2/r1)).
  static EtaFunction extremal(double r1, double r2);
  /// 1 / (r2 - r1).
  static EtaFunction constant(double r1, double r2);
  /// Integral of eta over (r1, r2).
  double normalization(double r1, double r2) const;
};

struct RingQOptions {
  BracketPlan bracket;         ///< image program sampling and solver
  int target_cells = 0;        ///< cells per axis on the image grid, 0 = largest source extent
  double eta_tol = 1e-3;       ///< eta accepted when its integral is >= 1 - eta_tol
  double rel_tol = 0.03;       ///< PASS when lower <= right * (1 + rel_tol)
  SphereQuadrature quad;
};

struct EtaCheck {
  std::string description;
  double normalization = 0.0;
  bool accepted = false;
  double right_side = 0.0;  ///< int_A Q eta^n dv
  bool pass = false;
};

struct RingQReport {
  RingSpec ring;
  Point image_center;
  double image_r1 = 0.0;  ///< max |f(S1) - f(x0)| over the samples
  double image_r2 = 0.0;  ///< min |f(S2) - f(x0)| over the samples
  bool image_is_ring = false;
  double image_lower = 0.0;
  double image_upper = 0.0;  ///< +inf when f(S1) and f(S2) are not separated by a ring
  double image_program_lower = 0.0;
  double image_flux_lower = 0.0;  ///< +inf unless the image is a round ring
  std::size_t curves = 0;
  std::vector<EtaCheck> etas;
  bool pass = false;  ///< at least one accepted eta and every accepted eta passes
};

/// Maps the sampled ring family forward, bounds the image modulus from below
/// (finite program on a Euclidean image grid, and the exact value when the
/// image is a round ring about f(x0)) and compares it with the weighted
/// integral of Q eta^n over the ring for every eta.
RingQReport ring_q_verify(const MappingSpec& f, const MetricField& field, const RingSpec& ring, const QField& q,
                          std::span<const EtaFunction> etas, const RingQOptions& opts = {});

// ------------------------------------------------------------ certificates

enum class CriterionBranch { kAuto, kFmo, kCondition3 };
enum class CertificateVerdict { kCertified, kConditional, kNotCertified };
const char* to_string(CriterionBranch b);
const char* to_string(CertificateVerdict v);

struct CertificateOptions {
  CriterionBranch branch = CriterionBranch::kAuto;
  int per_decade = 4;           ///< eps schedule density
  double depth_decades = 60.0;  ///< schedule runs from eps0 down to eps0 * 10^-depth
  int bisection_steps = 40;     ///< log-bisection refinement of each delta
  FOptions f;
  FmoOptions fmo;
  std::vector<double> fmo_eps;  ///< empty = 13 radii over three decades below eps0
  Condition3Options condition3;
  PsiFromQOptions psi;          ///< t_min 0 selects eps0 * 1e-12
};

struct CertificateRow {
  double eps = 0.0;
  double F = 0.0;
  double I = 0.0;
  double bound = 0.0;       ///< F / I^n
  double diam_bound = 0.0;  ///< C R^(1 + n - Q~) * bound
  bool min_attained = false;
};

struct SigmaDelta {
  double sigma = 0.0;
  double delta = 0.0;  ///< 0 when the schedule never reached sigma
  bool reached = false;
  bool min_attained = false;
  double F = 0.0;      ///< values at eps = delta
  double I = 0.0;
  double bound = 0.0;
};

struct CertificateReport {
  Point x0;
  double delta0 = 0.0;
  double eps0 = 0.0;
  TargetGeometry geom;
  CriterionBranch branch = CriterionBranch::kAuto;
  bool criterion_positive = false;
  bool criterion_negative = false;
  std::optional<FmoReport> fmo;
  std::optional<Condition3Report> condition3;
  std::string psi_description;
  std::vector<CertificateRow> rows;  ///< eps decreasing
  bool decreasing = false;
  double trend_slope = 0.0;
  std::vector<SigmaDelta> table;     ///< in the order of the requested sigmas
  CertificateVerdict verdict = CertificateVerdict::kNotCertified;
  std::vector<std::string> notes;
};

/// Runs the selected criterion at x0 (auto: the divergence test, then FMO),
/// builds F / I^n along a log schedule below eps0 with psi = psi_from_Q or
/// psi_fmo, turns it into diameter bounds and, for every sigma, reports the
/// largest eps with diameter bound <= sigma and min attainment. "certified"
/// needs a positive criterion, a nonincreasing bound and min attainment on
/// every reached row. Throws HypothesisError when I(eps, eps0) is not in
/// (0, inf).
CertificateReport equicontinuity_certificate(const MetricField& field, const QField& q, std::span<const double> x0,
                                             double delta0, const TargetGeometry& geom,
                                             std::span<const double> sigmas, const CertificateOptions& opts = {});

// ------------------------------------------------------------ Loewner calibration

/// Two straight continua E = [e0, e1], F = [f0, f1] inside the ball B(0, R).
struct LoewnerFixture {
  std::string name;
  Point e0, e1, f0, f1;
  double R = 1.0;
};

struct LoewnerSample {
  std::string name;
  double diam_E = 0.0;
  double diam_F = 0.0;
  double R = 1.0;
  double modulus = 0.0;  ///< finite-program lower bound of the sampled connecting family
  double ratio = 0.0;    ///< min(diam) / (R^(1 + n - Q~) modulus): the smallest admissible C
};

/// Curves joining E and F inside B(0, R): straight chords between `per_side`
/// stratified points of each segment, plus four bent copies of each chord
/// (quadratic arcs bulging by 0.2 and 0.4 of the chord length to either side,
/// in a seeded random normal direction above the plane).
/// Curves leaving the ball are dropped.
CurveFamily connecting_family(const MetricField& field, const LoewnerFixture& fx, int per_side, std::uint64_t seed = 0);

/// Default Euclidean fixtures in the plane and in space.
std::vector<LoewnerFixture> default_loewner_fixtures(int dim);

/// Modulus of each fixture's connecting family on `cells`^n over
/// [-1.1 R, 1.1 R]^n. The largest ratio is the smallest constant that makes
/// the inequality hold on the suite.
std::vector<LoewnerSample> loewner_calibration_suite(std::span<const LoewnerFixture> fixtures, int dim, int cells,
                                                     int per_side = 24);

}  // namespace ringmod
