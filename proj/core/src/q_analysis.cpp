#include "ringmod/q_analysis.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ringmod/error.hpp"
#include "ringmod/quadrature.hpp"

namespace ringmod {

namespace {

const std::string kIHypothesis = "0 < I(eps, eps0) < inf";

double chart_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double den = m * sxx - sx * sx;
  f.slope = den != 0.0 ? (m * sxy - sx * sy) / den : 0.0;
  f.intercept = (sy - f.slope * sx) / m;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - f.intercept - f.slope * x[i], 2);
  f.residual = std::sqrt(ss / m);
  return f;
}

}  // namespace

// ------------------------------------------------------------ psi

PsiFunction::PsiFunction(Fn eval, std::string description, double domain_hi, std::optional<Fn> antiderivative)
    : eval_(std::make_shared<const Fn>(std::move(eval))),
      description_(std::move(description)),
      domain_hi_(domain_hi),
      antiderivative_(std::move(antiderivative)) {}

PsiFunction PsiFunction::zero() {
  return PsiFunction([](double) { return 0.0; }, "0", std::numeric_limits<double>::infinity(),
                     [](double) { return 0.0; });
}

PsiFunction PsiFunction::power(double c, double p) {
  Fn anti;
  if (p == -1.0) {
    anti = [c](double t) { return c * std::log(t); };
  } else {
    anti = [c, p](double t) { return c * std::pow(t, p + 1.0) / (p + 1.0); };
  }
  return PsiFunction([c, p](double t) { return c * std::pow(t, p); },
                     std::to_string(c) + " * t^" + std::to_string(p), std::numeric_limits<double>::infinity(), anti);
}

double PsiFunction::operator()(double t) const {
  if (!(t > 0.0) || !(t < domain_hi_)) {
    throw DomainError("psi evaluated outside (0, " + std::to_string(domain_hi_) + "): t = " + std::to_string(t));
  }
  return (*eval_)(t);
}

double PsiFunction::antiderivative(double t) const {
  if (!antiderivative_) throw DomainError("psi has no closed-form antiderivative");
  return (*antiderivative_)(t);
}

PsiFunction psi_fmo() {
  return PsiFunction([](double t) { return 1.0 / (t * std::log(1.0 / t)); }, "1/(t log(1/t))", std::exp(-1.0),
                     [](double t) { return -std::log(std::log(1.0 / t)); });
}

PsiFromQ psi_from_Q(const MetricField& field, const QField& q, std::span<const double> x0, double delta,
                    const PsiFromQOptions& opts) {
  if (!(delta > 0.0)) throw DomainError("psi_from_Q needs delta > 0");
  const int n = field.dim();
  const double t_min = opts.t_min > 0.0 ? opts.t_min : delta * 1e-6;
  if (!(t_min < delta)) throw DomainError("psi_from_Q needs t_min < delta");
  const int rows = static_cast<int>(std::ceil(std::log10(delta / t_min) * opts.per_decade)) + 1;

  PsiFromQ out{PsiFunction::zero(), {}, false};
  auto table = std::make_shared<ShellTable>();
  for (int k = 0; k < rows; ++k) {
    const double t = delta * std::pow(10.0, -static_cast<double>(k) / opts.per_decade);
    const double a = surface_measure(field, SphereSpec{Point(x0.begin(), x0.end()), t}, q, opts.quad);
    table->t.push_back(t);
    table->a.push_back(a);
    if (!(a > 0.0)) out.infinite_somewhere = true;
  }
  out.table = *table;
  const double expo = 1.0 / (1.0 - n);
  auto eval = [table, delta, expo](double t) -> double {
    if (t >= delta) return 0.0;
    const auto& ts = table->t;
    const auto& as = table->a;
    const std::size_t m = ts.size();
    // Locate i with ts[i] >= t >= ts[i+1]; extrapolate with the last pair.
    std::size_t i = 0;
    if (t <= ts[m - 1]) {
      i = m - 2;
    } else {
      const auto it = std::upper_bound(ts.begin(), ts.end(), t, std::greater<>());
      i = static_cast<std::size_t>(it - ts.begin()) - 1;
      i = std::min(i, m - 2);
    }
    if (!(as[i] > 0.0) || !(as[i + 1] > 0.0)) return std::numeric_limits<double>::infinity();
    const double w = (std::log(t) - std::log(ts[i])) / (std::log(ts[i + 1]) - std::log(ts[i]));
    const double log_a = (1.0 - w) * std::log(as[i]) + w * std::log(as[i + 1]);
    return std::exp(expo * log_a);
  };
  out.psi = PsiFunction(eval, "shell integrals of Q to the power 1/(1-n)");
  return out;
}

double I_integral(const PsiFunction& psi, double eps, double eps0) {
  if (!(eps > 0.0 && eps < eps0)) throw DomainError("I_integral needs 0 < eps < eps0");
  if (eps0 > psi.domain_hi()) throw DomainError("eps0 beyond the domain of psi");
  double value = 0.0;
  if (psi.closed_form()) {
    value = psi.antiderivative(eps0) - psi.antiderivative(eps);
  } else {
    int per_decade = 8;
    double coarse = quad::log_panels([&](double t) { return psi(t); }, eps, eps0, per_decade);
    for (;;) {
      per_decade *= 2;
      value = quad::log_panels([&](double t) { return psi(t); }, eps, eps0, per_decade);
      if (!std::isfinite(value) || std::abs(value - coarse) <= 1e-9 * std::abs(value) || per_decade >= 256) break;
      coarse = value;
    }
  }
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw HypothesisError(kIHypothesis, "I(" + std::to_string(eps) + ", " + std::to_string(eps0) +
                                            ") = " + std::to_string(value));
  }
  return value;
}

double F_integral(const MetricField& field, const QField& q, const PsiFunction& psi, std::span<const double> x0,
                  double eps, double eps0, const FOptions& opts) {
  if (!(eps > 0.0 && eps < eps0)) throw DomainError("F_integral needs 0 < eps < eps0");
  if (!q.integrable()) {
    for (const Point& p : q.singular_points()) {
      const double d = chart_distance(p, x0);
      if (d >= eps && d <= eps0) throw IntegrationError("non-integrable singularity of Q inside the annulus");
    }
  }
  const int n = field.dim();
  const Point center(x0.begin(), x0.end());
  auto integrand = [&](double t) {
    const double p = psi(t);
    if (p == 0.0) return 0.0;
    return surface_measure(field, SphereSpec{center, t}, q, opts.quad) * std::pow(p, n);
  };
  const double value = quad::log_panels(integrand, eps, eps0, opts.per_decade);
  if (!std::isfinite(value)) throw IntegrationError("F(eps, eps0) is not finite");
  return value;
}

CapacityBound capacity_upper_bound(const MetricField& field, const QField& q, const PsiFunction& psi,
                                   std::span<const double> x0, double eps, double eps0, const FOptions& opts) {
  CapacityBound b;
  b.eps = eps;
  b.eps0 = eps0;
  b.I = I_integral(psi, eps, eps0);
  b.F = F_integral(field, q, psi, x0, eps, eps0, opts);
  b.bound = b.F / std::pow(b.I, field.dim());
  return b;
}

BoundSchedule capacity_bound_schedule(const MetricField& field, const QField& q, const PsiFunction& psi,
                                      std::span<const double> x0, double eps0, std::span<const double> eps_list,
                                      const FOptions& opts) {
  BoundSchedule out;
  const int n = field.dim();
  double f_acc = 0.0;
  double i_acc = 0.0;
  double prev = eps0;
  for (double eps : eps_list) {
    if (!(eps > 0.0 && eps < prev)) throw DomainError("eps schedule must decrease below eps0");
    f_acc += F_integral(field, q, psi, x0, eps, prev, opts);
    if (psi.closed_form()) {
      i_acc = I_integral(psi, eps, eps0);
    } else {
      i_acc += quad::log_panels([&](double t) { return psi(t); }, eps, prev, 32);
      if (!(i_acc > 0.0) || !std::isfinite(i_acc)) {
        throw HypothesisError(kIHypothesis, "I(" + std::to_string(eps) + ", " + std::to_string(eps0) +
                                                ") = " + std::to_string(i_acc));
      }
    }
    out.rows.push_back({eps, eps0, f_acc, i_acc, f_acc / std::pow(i_acc, n)});
    prev = eps;
  }
  out.decreasing = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k) {
    if (out.rows[k].bound > out.rows[k - 1].bound * (1.0 + 1e-9)) out.decreasing = false;
  }
  std::vector<double> x, y;
  for (const CapacityBound& r : out.rows) {
    if (r.bound > 0.0) {
      x.push_back(std::log(std::log(eps0 / r.eps)));
      y.push_back(std::log(r.bound));
    }
  }
  if (x.size() >= 2) out.trend_slope = fit_line(x, y).slope;
  return out;
}

// ------------------------------------------------------------ FMO

const char* to_string(FmoVerdict v) {
  switch (v) {
    case FmoVerdict::kFmo:
      return "FMO";
    case FmoVerdict::kNotFmo:
      return "not-FMO";
    case FmoVerdict::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

std::vector<double> log_spaced(double hi, double lo, int count) {
  if (count < 2 || !(hi > lo && lo > 0.0)) throw DomainError("log_spaced needs hi > lo > 0 and count >= 2");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = hi * std::pow(lo / hi, static_cast<double>(k) / (count - 1));
  return out;
}

FmoReport fmo_indicator(const MetricField& field, const QField& q, std::span<const double> x0,
                        std::span<const double> eps_list, const FmoOptions& opts) {
  if (eps_list.size() < 4) throw InsufficientDataError("FMO indicator needs at least 4 radii");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw InsufficientDataError("FMO radii must decrease");
  }
  if (eps_list.front() / eps_list.back() < 100.0 * (1.0 - 1e-9)) {
    throw InsufficientDataError("FMO radii must span at least two decades");
  }
  if (!q.integrable()) {
    for (const Point& p : q.singular_points()) {
      if (chart_distance(p, x0) < eps_list.front()) throw IntegrationError("non-integrable singularity of Q in the ball");
    }
  }

  FmoReport rep;
  const auto radial_one = [](double) { return 1.0; };
  for (double eps : eps_list) {
    const double vol = radial_volume_integral(field, x0, 0.0, eps, radial_one, nullptr, opts.quad);
    const double mass = radial_volume_integral(field, x0, 0.0, eps, radial_one, &q, opts.quad);
    const double mean = mass / vol;
    const QField deviation([&q, mean](std::span<const double> x) { return std::abs(q(x) - mean); }, "|Q - mean|");
    double osc = radial_volume_integral(field, x0, 0.0, eps, radial_one, &deviation, opts.quad) / vol;
    if (osc <= 1e-9 * std::abs(mean)) osc = 0.0;
    if (!std::isfinite(mean) || !std::isfinite(osc)) throw IntegrationError("ball average of Q is not finite");
    rep.eps.push_back(eps);
    rep.mean.push_back(mean);
    rep.oscillation.push_back(osc);
  }

  // Growth over the two smallest decades, relative to the largest radius there.
  const double window = rep.eps.back() * 100.0 * (1.0 + 1e-9);
  std::size_t first = 0;
  while (rep.eps[first] > window) ++first;
  double peak = 0.0;
  for (std::size_t k = first; k < rep.eps.size(); ++k) peak = std::max(peak, rep.oscillation[k]);
  rep.limsup_estimate = peak;

  std::vector<double> x, y;
  for (std::size_t k = 0; k < rep.eps.size(); ++k) {
    if (rep.oscillation[k] > 0.0) {
      x.push_back(std::log(rep.eps[k]));
      y.push_back(std::log(rep.oscillation[k]));
    }
  }
  if (peak == 0.0) {
    rep.verdict = FmoVerdict::kFmo;
    return rep;
  }
  if (x.size() >= 3) {
    const LineFit f = fit_line(x, y);
    rep.slope = f.slope;
    rep.residual = f.residual;
  }
  const double anchor = rep.oscillation[first];
  rep.ratio = anchor > 0.0 ? peak / anchor : std::numeric_limits<double>::infinity();
  if (x.size() >= 3 && rep.slope <= opts.slope_threshold && rep.residual < opts.residual_max) {
    rep.verdict = FmoVerdict::kNotFmo;
  } else if (rep.ratio < opts.ratio_max) {
    rep.verdict = FmoVerdict::kFmo;
  } else {
    rep.verdict = FmoVerdict::kInconclusive;
  }
  return rep;
}

// ------------------------------------------------------------ divergence test

const char* to_string(DivergenceVerdict v) {
  switch (v) {
    case DivergenceVerdict::kDivergent:
      return "divergent";
    case DivergenceVerdict::kConvergent:
      return "convergent";
    case DivergenceVerdict::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

double default_delta(const ChartGrid& grid, std::span<const double> x0) {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid.dim(); ++a) {
    d = std::min({d, x0[static_cast<std::size_t>(a)] - grid.lower(a), grid.upper(a) - x0[static_cast<std::size_t>(a)]});
  }
  if (!(d > 0.0)) throw DomainError("x0 is not inside the grid");
  return 0.5 * d;
}

Condition3Report condition3_test(const MetricField& field, const QField& q, std::span<const double> x0,
                                 double delta, const Condition3Options& opts) {
  if (!(delta > 0.0)) throw DomainError("condition 3 needs delta > 0");
  const int n = field.dim();
  const double t_min = opts.t_min > 0.0 ? opts.t_min : delta * 1e-12;
  const int rows = static_cast<int>(std::ceil(std::log10(delta / t_min) * opts.per_decade)) + 1;
  const double expo = 1.0 / (1.0 - n);
  const Point center(x0.begin(), x0.end());

  Condition3Report rep;
  rep.delta = delta;
  rep.dim = n;
  double partial = 0.0;
  for (int k = 0; k < rows; ++k) {
    const double t = delta * std::pow(10.0, -static_cast<double>(k) / opts.per_decade);
    const double a = surface_measure(field, SphereSpec{center, t}, q, opts.quad);
    const double g = a > 0.0 ? std::pow(a, expo) : std::numeric_limits<double>::infinity();
    if (!(a > 0.0)) ++rep.degenerate_shells;
    if (k > 0) {
      const double t_prev = rep.t.back();
      partial += 0.5 * (g * t + rep.integrand.back() * t_prev) * std::log(t_prev / t);
    }
    rep.t.push_back(t);
    rep.a.push_back(a);
    rep.integrand.push_back(g);
    rep.partial.push_back(partial);
  }

  // log g = c + s log t + beta log log(e delta / t), fitted for t <= delta / 100.
  std::vector<std::array<double, 3>> rows_x;
  std::vector<double> rows_y;
  for (std::size_t k = 0; k < rep.t.size(); ++k) {
    const double t = rep.t[k];
    if (t > delta / 100.0 * (1.0 + 1e-12) || !std::isfinite(rep.integrand[k]) || !(rep.integrand[k] > 0.0)) continue;
    rows_x.push_back({1.0, std::log(t), std::log(std::log(std::numbers::e * delta / t))});
    rows_y.push_back(std::log(rep.integrand[k]));
  }
  if (rep.degenerate_shells > 0) {
    rep.verdict = DivergenceVerdict::kDivergent;
    rep.tail_estimate = std::numeric_limits<double>::infinity();
    return rep;
  }
  if (rows_x.size() < 4) throw InsufficientDataError("too few shells below delta / 100 to classify");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows_x.size()), 3);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(rows_y.size()));
  for (std::size_t i = 0; i < rows_x.size(); ++i) {
    for (int j = 0; j < 3; ++j) X(static_cast<Eigen::Index>(i), j) = rows_x[i][static_cast<std::size_t>(j)];
    Y(static_cast<Eigen::Index>(i)) = rows_y[i];
  }
  const Eigen::Vector3d coef = X.colPivHouseholderQr().solve(Y);
  rep.slope = coef(1);
  rep.log_power = coef(2);
  rep.residual = std::sqrt((X * coef - Y).squaredNorm() / static_cast<double>(rows_y.size()));

  const double s = rep.slope;
  const double t_last = rep.t.back();
  rep.tail_estimate = s > -1.0 ? rep.integrand.back() * t_last / (s + 1.0) : std::numeric_limits<double>::infinity();
  const double total = rep.partial.back();
  if (s < -1.0 - opts.slope_band) {
    rep.verdict = DivergenceVerdict::kDivergent;
  } else if (s > -1.0 + opts.slope_band) {
    rep.verdict = rep.tail_estimate <= 0.01 * total ? DivergenceVerdict::kConvergent : DivergenceVerdict::kInconclusive;
  } else if (rep.log_power >= opts.log_power_divergent) {
    rep.verdict = DivergenceVerdict::kDivergent;
  } else if (rep.log_power < opts.log_power_convergent) {
    rep.verdict = DivergenceVerdict::kConvergent;
  } else {
    rep.verdict = DivergenceVerdict::kInconclusive;
  }
  return rep;
}

}  // namespace ringmod
