#pragma once

// Criteria on the weight Q at a point x0: finite mean oscillation, the
// sphere-integral divergence test, and the capacity bound F / I^n built from
// a radial gauge psi.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringmod/manifold.hpp"

namespace ringmod {

/// Nonnegative radial gauge psi(t). Evaluation at t <= 0 or t >= domain_hi
/// throws DomainError.
class PsiFunction {
 public:
  using Fn = std::function<double(double)>;

  PsiFunction(Fn eval, std::string description, double domain_hi = std::numeric_limits<double>::infinity(),
              std::optional<Fn> antiderivative = std::nullopt);

  /// psi = 0.
  static PsiFunction zero();
  /// psi(t) = c * t^p, with its antiderivative.
  static PsiFunction power(double c, double p);

  double operator()(double t) const;
  bool closed_form() const noexcept { return antiderivative_.has_value(); }
  /// Requires closed_form().
  double antiderivative(double t) const;
  const std::string& description() const noexcept { return description_; }
  double domain_hi() const noexcept { return domain_hi_; }

 private:
  std::shared_ptr<const Fn> eval_;
  std::string description_;
  double domain_hi_;
  std::optional<Fn> antiderivative_;
};

/// psi(t) = 1 / (t log(1/t)) on (0, 1/e), antiderivative -log log(1/t).
PsiFunction psi_fmo();

/// Shell integrals a(t) = int_{S(x0, t)} Q dA on a log-spaced table.
struct ShellTable {
  std::vector<double> t;  ///< decreasing
  std::vector<double> a;
};

struct PsiFromQOptions {
  double t_min = 0.0;  ///< 0 selects delta * 1e-6
  int per_decade = 16;
  SphereQuadrature quad;
};

struct PsiFromQ {
  PsiFunction psi;
  ShellTable table;
  bool infinite_somewhere = false;  ///< some shell had a(t) = 0
};

/// psi(t) = a(t)^(1/(1-n)) on (0, delta), 0 for t >= delta. Log-linear
/// interpolation of the table; below t_min the last two rows extend as a
/// power law.
PsiFromQ psi_from_Q(const MetricField& field, const QField& q, std::span<const double> x0, double delta,
                    const PsiFromQOptions& opts = {});

/// I(eps, eps0) = int_eps^eps0 psi dt. Closed form when available, otherwise
/// log-spaced Gauss panels checked against a halved step. Throws
/// HypothesisError unless 0 < I < inf.
double I_integral(const PsiFunction& psi, double eps, double eps0);

struct FOptions {
  int per_decade = 8;
  SphereQuadrature quad;
};

/// F(eps, eps0) = int_eps^eps0 a_Q(t) psi(t)^n dt with a_Q(t) the surface
/// integral of Q over S(x0, t): the shell decomposition of
/// int_{eps < |x - x0| < eps0} Q psi^n(|x - x0|) dv. Throws IntegrationError
/// for a non-integrable singularity of Q inside the annulus.
double F_integral(const MetricField& field, const QField& q, const PsiFunction& psi, std::span<const double> x0,
                  double eps, double eps0, const FOptions& opts = {});

struct CapacityBound {
  double eps = 0.0;
  double eps0 = 0.0;
  double F = 0.0;
  double I = 0.0;
  double bound = 0.0;  ///< F / I^n
};

CapacityBound capacity_upper_bound(const MetricField& field, const QField& q, const PsiFunction& psi,
                                   std::span<const double> x0, double eps, double eps0, const FOptions& opts = {});

struct BoundSchedule {
  std::vector<CapacityBound> rows;  ///< eps decreasing
  bool decreasing = false;          ///< bound nonincreasing as eps decreases
  double trend_slope = 0.0;         ///< d log(bound) / d log log(eps0/eps)
};

/// Bounds along a decreasing eps schedule, accumulating F and I shell by shell.
BoundSchedule capacity_bound_schedule(const MetricField& field, const QField& q, const PsiFunction& psi,
                                      std::span<const double> x0, double eps0, std::span<const double> eps_list,
                                      const FOptions& opts = {});

// ------------------------------------------------------------ FMO

enum class FmoVerdict { kFmo, kNotFmo, kInconclusive };
const char* to_string(FmoVerdict v);

struct FmoOptions {
  double slope_threshold = -0.1;   ///< not-FMO when slope <= this ...
  double residual_max = 0.1;       ///< ... with RMS fit residual below this
  double ratio_max = 10.0;         ///< FMO when max/median over the two smallest decades is below this
  SphereQuadrature quad;
};

struct FmoReport {
  std::vector<double> eps;
  std::vector<double> mean;         ///< volume average of Q over B(x0, eps)
  std::vector<double> oscillation;  ///< average of |Q - mean| over B(x0, eps)
  double slope = 0.0;               ///< log-log slope of oscillation against eps
  double residual = 0.0;
  double ratio = 0.0;               ///< max / median over the two smallest decades
  double limsup_estimate = 0.0;     ///< largest oscillation over the two smallest decades
  FmoVerdict verdict = FmoVerdict::kInconclusive;
};

/// Needs >= 4 decreasing radii spanning >= 2 decades (InsufficientDataError).
FmoReport fmo_indicator(const MetricField& field, const QField& q, std::span<const double> x0,
                        std::span<const double> eps_list, const FmoOptions& opts = {});

/// `count` radii log-spaced from hi down to lo.
std::vector<double> log_spaced(double hi, double lo, int count);

// ------------------------------------------------------------ divergence test

enum class DivergenceVerdict { kDivergent, kConvergent, kInconclusive };
const char* to_string(DivergenceVerdict v);

struct Condition3Options {
  double t_min = 0.0;       ///< 0 selects delta * 1e-8
  int per_decade = 4;
  double slope_band = 0.05; ///< |s + 1| <= band is the borderline regime
  double log_power_divergent = -1.1;   ///< borderline: beta >= this diverges
  double log_power_convergent = -1.5;  ///< borderline: beta < this converges
  SphereQuadrature quad;
};

struct Condition3Report {
  double delta = 0.0;
  int dim = 0;
  std::vector<double> t;          ///< decreasing
  std::vector<double> a;          ///< shell integrals of Q
  std::vector<double> integrand;  ///< a^(1/(1-n)), +inf where a = 0
  std::vector<double> partial;    ///< int_t^delta of the integrand, nondecreasing
  double slope = 0.0;             ///< s in log g = c + s log t + beta log log(e delta / t)
  double log_power = 0.0;         ///< beta
  double residual = 0.0;
  double tail_estimate = 0.0;     ///< int_0^t_min from the fitted law (+inf if divergent)
  std::size_t degenerate_shells = 0;
  DivergenceVerdict verdict = DivergenceVerdict::kInconclusive;
};

/// Tests whether int_0^delta a(t)^(1/(1-n)) dt diverges. The integrand is
/// fitted on the lower part of the table (t <= delta / 100). Shells with
/// a(t) = 0 are reported and count as a divergent contribution.
Condition3Report condition3_test(const MetricField& field, const QField& q, std::span<const double> x0,
                                 double delta, const Condition3Options& opts = {});

/// Half the chart distance from x0 to the grid boundary.
double default_delta(const ChartGrid& grid, std::span<const double> x0);

}  // namespace ringmod
