#include "ringmod/equicontinuity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "ringmod/error.hpp"
#include "ringmod/quadrature.hpp"

namespace ringmod {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double unit_sphere_area(int n) { return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n); }

double norm_between(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

// ------------------------------------------------------------ geometry

void TargetGeometry::validate() const {
  if (dim < 2) throw DomainError("target dimension must be >= 2");
  if (!(R > 0.0)) throw DomainError("target radius R must be positive");
  if (!(diam_K > 0.0 && diam_K <= 2.0 * R)) throw DomainError("diam_K must lie in (0, 2R]");
  if (!(C_loewner >= 1.0)) throw DomainError("Loewner constant must be >= 1");
  if (q_tilde < 0.0) throw DomainError("regularity exponent must be positive");
}

double TargetGeometry::scale() const { return C_loewner * std::pow(R, 1.0 + dim - exponent()); }

double loewner_lower_bound(double diam_E, double diam_F, double R, const TargetGeometry& geom) {
  if (!(diam_E > 0.0) || !(diam_F > 0.0)) throw DegenerateContinuumError("continua must have positive diameter");
  TargetGeometry g = geom;
  g.R = R;
  g.diam_K = std::min(g.diam_K, 2.0 * R);
  g.validate();
  return std::min(diam_E, diam_F) / g.scale();
}

DiameterBound diameter_bound(double cap_bound, const TargetGeometry& geom) {
  if (!(cap_bound >= 0.0)) throw DomainError("capacity bound must be nonnegative");
  geom.validate();
  DiameterBound d;
  d.value = geom.scale() * cap_bound;
  d.min_attained = d.value < geom.diam_K;
  return d;
}

// ------------------------------------------------------------ mappings

const char* to_string(MappingKind kind) {
  switch (kind) {
    case MappingKind::kIdentity: return "identity";
    case MappingKind::kRadialStretch: return "radial-stretch";
    case MappingKind::kWinding: return "winding";
    case MappingKind::kLinear: return "linear";
    case MappingKind::kUser: return "user";
  }
  return "?";
}

MappingSpec::MappingSpec(int dim, MapFn map, std::optional<JacobianFn> jacobian, MappingKind kind,
                         std::string description, double parameter)
    : dim_(dim),
      map_(std::move(map)),
      jacobian_(std::move(jacobian)),
      kind_(kind),
      description_(std::move(description)),
      parameter_(parameter) {
  if (dim_ < 2) throw DomainError("mapping dimension must be >= 2");
}

MappingSpec MappingSpec::identity(int dim) {
  return MappingSpec(
      dim, [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); },
      [dim](std::span<const double>, Eigen::MatrixXd& j) { j = Eigen::MatrixXd::Identity(dim, dim); },
      MappingKind::kIdentity, "identity");
}

MappingSpec MappingSpec::radial_stretch(int dim, double alpha, Point center) {
  if (!(alpha > 0.0)) throw DomainError("stretch exponent must be positive");
  if (center.empty()) center.assign(static_cast<std::size_t>(dim), 0.0);
  if (static_cast<int>(center.size()) != dim) throw DomainError("stretch center has the wrong dimension");
  auto map = [alpha, center](std::span<const double> x, std::span<double> y) {
    const double r = norm_between(x, center);
    const double s = r > 0.0 ? std::pow(r, alpha - 1.0) : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = center[i] + (x[i] - center[i]) * s;
  };
  // Df = r^(alpha-1) (I + (alpha - 1) u u^T) with u the unit radial vector.
  auto jac = [alpha, center, dim](std::span<const double> x, Eigen::MatrixXd& j) {
    Eigen::VectorXd u(dim);
    for (int i = 0; i < dim; ++i) u(i) = x[static_cast<std::size_t>(i)] - center[static_cast<std::size_t>(i)];
    const double r = u.norm();
    if (r == 0.0) {
      if (alpha == 1.0) {
        j = Eigen::MatrixXd::Identity(dim, dim);
      } else {
        j = Eigen::MatrixXd::Constant(dim, dim, kInf);
      }
      return;
    }
    u /= r;
    j = std::pow(r, alpha - 1.0) * (Eigen::MatrixXd::Identity(dim, dim) + (alpha - 1.0) * u * u.transpose());
  };
  return MappingSpec(dim, map, jac, MappingKind::kRadialStretch, "radial-stretch alpha=" + fmt(alpha), alpha);
}

MappingSpec MappingSpec::winding(int k, Point center) {
  if (k < 1) throw DomainError("winding number must be >= 1");
  if (center.empty()) center.assign(2, 0.0);
  if (center.size() != 2) throw DomainError("winding maps are planar");
  using C = std::complex<double>;
  auto map = [k, center](std::span<const double> x, std::span<double> y) {
    const C w = std::pow(C(x[0] - center[0], x[1] - center[1]), k);
    y[0] = center[0] + w.real();
    y[1] = center[1] + w.imag();
  };
  auto jac = [k, center](std::span<const double> x, Eigen::MatrixXd& j) {
    const C d = static_cast<double>(k) * std::pow(C(x[0] - center[0], x[1] - center[1]), k - 1);
    j.resize(2, 2);
    j << d.real(), -d.imag(), d.imag(), d.real();
  };
  return MappingSpec(2, map, jac, MappingKind::kWinding, "winding k=" + std::to_string(k), k);
}

MappingSpec MappingSpec::linear(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 2) throw DomainError("linear map needs a square matrix of size >= 2");
  if (std::abs(a.determinant()) == 0.0) throw DomainError("linear map must be invertible");
  const int dim = static_cast<int>(a.rows());
  auto map = [a](std::span<const double> x, std::span<double> y) {
    const Eigen::VectorXd v = a * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) y[static_cast<std::size_t>(i)] = v(i);
  };
  auto jac = [a](std::span<const double>, Eigen::MatrixXd& j) { j = a; };
  std::ostringstream os;
  os << "linear [";
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) os << (r || c ? " " : "") << fmt(a(r, c));
    if (r + 1 < a.rows()) os << ";";
  }
  os << "]";
  return MappingSpec(dim, map, jac, MappingKind::kLinear, os.str());
}

MappingSpec MappingSpec::user(const std::vector<Expression>& components) {
  const int dim = static_cast<int>(components.size());
  if (dim < 2) throw DomainError("user mapping needs at least two components");
  auto map = [components](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < components.size(); ++i) y[i] = components[i].evaluate(x);
  };
  std::string desc = "user (";
  for (std::size_t i = 0; i < components.size(); ++i) desc += (i ? ", " : "") + components[i].text();
  desc += ")";
  return MappingSpec(dim, map, std::nullopt, MappingKind::kUser, desc);
}

Point MappingSpec::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw DomainError("mapping applied to a point of the wrong dimension");
  Point y(static_cast<std::size_t>(dim_));
  map_(x, y);
  return y;
}

Eigen::MatrixXd MappingSpec::jacobian(std::span<const double> x) const {
  Eigen::MatrixXd j(dim_, dim_);
  if (jacobian_) {
    (*jacobian_)(x, j);
    return j;
  }
  Point xp(x.begin(), x.end());
  Point yp(static_cast<std::size_t>(dim_)), ym(static_cast<std::size_t>(dim_));
  for (int c = 0; c < dim_; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const double h = 1e-6 * std::max(1.0, std::abs(x[ci]));
    xp[ci] = x[ci] + h;
    map_(xp, yp);
    xp[ci] = x[ci] - h;
    map_(xp, ym);
    xp[ci] = x[ci];
    for (int r = 0; r < dim_; ++r) j(r, c) = (yp[static_cast<std::size_t>(r)] - ym[static_cast<std::size_t>(r)]) / (2 * h);
  }
  return j;
}

double outer_dilatation(const MappingSpec& f, const MetricField& field, std::span<const double> x) {
  const int n = f.dim();
  if (n != field.dim()) throw DomainError("mapping and metric dimensions differ");
  const Eigen::MatrixXd j = f.jacobian(x);
  if (!j.allFinite()) return kInf;
  const double det = std::abs(j.determinant());
  if (!(det > 0.0)) return kInf;
  if (field.is_euclidean()) {
    const double smax = Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues()(0);
    return std::pow(smax, n) / det;
  }
  const Eigen::MatrixXd g = field.at(x);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(j.transpose() * j, g, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  return std::pow(lmax, 0.5 * n) * std::sqrt(g.determinant()) / det;
}

QField dilatation_field(const MappingSpec& f, const MetricField& field) {
  const int n = field.dim();
  if (f.dim() != n) throw DomainError("mapping and metric dimensions differ");
  const ChartGrid& grid = field.grid();
  std::vector<Point> singular;
  Point p(static_cast<std::size_t>(n));
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    grid.node_position(node, p);
    if (!std::isfinite(outer_dilatation(f, field, p))) singular.push_back(p);
  }
  auto eval = [f, field, n](std::span<const double> x) {
    return std::pow(outer_dilatation(f, field, x), n - 1);
  };
  return QField(eval, "K_O^(n-1) of " + f.description(), std::move(singular), true);
}

// ------------------------------------------------------------ ring Q-inequality

EtaFunction EtaFunction::extremal(double r1, double r2) {
  if (!(r1 > 0.0 && r2 > r1)) throw DomainError("eta needs 0 < r1 < r2");
  const double l = std::log(r2 / r1);
  return {[l](double t) { return 1.0 / (t * l); }, "extremal 1/(t log(r2/r1))"};
}

EtaFunction EtaFunction::constant(double r1, double r2) {
  if (!(r1 > 0.0 && r2 > r1)) throw DomainError("eta needs 0 < r1 < r2");
  const double v = 1.0 / (r2 - r1);
  return {[v](double) { return v; }, "constant 1/(r2-r1)"};
}

double EtaFunction::normalization(double r1, double r2) const {
  return quad::log_panels(eval, r1, r2, 16);
}

RingQReport ring_q_verify(const MappingSpec& f, const MetricField& field, const RingSpec& ring, const QField& q,
                          std::span<const EtaFunction> etas, const RingQOptions& opts) {
  const ChartGrid& grid = field.grid();
  const int n = field.dim();
  if (f.dim() != n) throw DomainError("mapping and metric dimensions differ");
  if (ring.mode != DistanceMode::kChartEuclidean) throw DomainError("ring_q_verify needs a chart-Euclidean ring");
  ring.validate(grid);

  RingQReport rep;
  rep.ring = ring;
  rep.image_center = f(ring.center);

  const int count = opts.bracket.curve_count > 0 ? opts.bracket.curve_count : default_ring_curve_count(grid, ring);
  CurveFamily family = sample_ring_curves(field, ring, count, opts.bracket.perturbation, opts.bracket.seed);

  // Forward-map every vertex and collect the image bounding box.
  Point lo(static_cast<std::size_t>(n), kInf), hi(static_cast<std::size_t>(n), -kInf);
  CurveFamily image;
  image.kind = FamilyKind::kUserSupplied;
  image.seed = opts.bracket.seed;
  image.curves.reserve(family.curves.size());
  for (const CurvePolyline& c : family.curves) {
    CurvePolyline m;
    m.closed = c.closed;
    m.vertices.reserve(c.vertices.size());
    for (const Point& v : c.vertices) {
      Point y = f(v);
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (!std::isfinite(y[ii])) throw DomainError("mapping is not finite on the ring");
        lo[ii] = std::min(lo[ii], y[ii]);
        hi[ii] = std::max(hi[ii], y[ii]);
      }
      m.vertices.push_back(std::move(y));
    }
    image.curves.push_back(std::move(m));
  }
  rep.curves = image.curves.size();

  // Image radii of the two boundary spheres about f(x0).
  const int dirs = n == 2 ? 4096 : 8192;
  double s1_min = kInf, s1_max = 0.0, s2_min = kInf, s2_max = 0.0;
  Point x(static_cast<std::size_t>(n));
  for (const Point& u : sphere_directions(n, dirs, false, 0)) {
    for (int side = 0; side < 2; ++side) {
      const double r = side == 0 ? ring.r1 : ring.r2;
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        x[ii] = ring.center[ii] + r * u[ii];
      }
      const Point y = f(x);
      const double d = norm_between(y, rep.image_center);
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        lo[ii] = std::min(lo[ii], y[ii]);
        hi[ii] = std::max(hi[ii], y[ii]);
      }
      if (side == 0) {
        s1_min = std::min(s1_min, d);
        s1_max = std::max(s1_max, d);
      } else {
        s2_min = std::min(s2_min, d);
        s2_max = std::max(s2_max, d);
      }
    }
  }
  rep.image_r1 = s1_max;
  rep.image_r2 = s2_min;
  const double omega = unit_sphere_area(n);
  rep.image_is_ring = s1_max - s1_min <= 1e-9 * s1_max && s2_max - s2_min <= 1e-9 * s2_max && s1_max < s2_min;
  // Every image curve crosses the ring s1_max < |y - f(x0)| < s2_min, so its
  // modulus bounds the image family from above.
  rep.image_upper = s1_max < s2_min ? omega * std::pow(std::log(s2_min / s1_max), 1 - n) : kInf;

  // Euclidean image grid: cube around the bounding box, padded by 10%.
  double half = 0.0;
  Point mid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    mid[ii] = 0.5 * (lo[ii] + hi[ii]);
    half = std::max(half, 0.5 * (hi[ii] - lo[ii]));
  }
  half *= 1.1;
  int cells = opts.target_cells;
  if (cells <= 0) cells = *std::max_element(grid.extents().begin(), grid.extents().end());
  std::vector<double> origin(static_cast<std::size_t>(n)), spacing(static_cast<std::size_t>(n), 2 * half / cells);
  for (int i = 0; i < n; ++i) origin[static_cast<std::size_t>(i)] = mid[static_cast<std::size_t>(i)] - half;
  const MetricField target = MetricField::euclidean(
      ChartGrid(origin, spacing, std::vector<int>(static_cast<std::size_t>(n), cells)));

  rep.image_program_lower = modulus_lower(image, target, opts.bracket.solver).value;
  rep.image_flux_lower = kInf;
  if (rep.image_is_ring) {
    const RingSpec image_ring{rep.image_center, s1_max, s2_min, DistanceMode::kChartEuclidean};
    if (target.grid().contains_ball(image_ring.center, image_ring.r2)) {
      rep.image_flux_lower = radial_flux_lower(image_ring, target);
    }
  }
  rep.image_lower = std::min(rep.image_program_lower, rep.image_flux_lower);

  bool any = false;
  rep.pass = true;
  for (const EtaFunction& eta : etas) {
    EtaCheck chk;
    chk.description = eta.description;
    chk.normalization = eta.normalization(ring.r1, ring.r2);
    chk.accepted = chk.normalization >= 1.0 - opts.eta_tol;
    if (chk.accepted) {
      auto radial = [&eta, n](double t) { return std::pow(eta.eval(t), n); };
      chk.right_side = radial_volume_integral(field, ring.center, ring.r1, ring.r2, radial, &q, opts.quad);
      chk.pass = rep.image_lower <= chk.right_side * (1.0 + opts.rel_tol);
      rep.pass = rep.pass && chk.pass;
      any = true;
    }
    rep.etas.push_back(std::move(chk));
  }
  rep.pass = rep.pass && any;
  return rep;
}

// ------------------------------------------------------------ certificates

const char* to_string(CriterionBranch b) {
  switch (b) {
    case CriterionBranch::kAuto: return "auto";
    case CriterionBranch::kFmo: return "fmo";
    case CriterionBranch::kCondition3: return "condition3";
  }
  return "?";
}

const char* to_string(CertificateVerdict v) {
  switch (v) {
    case CertificateVerdict::kCertified: return "certified";
    case CertificateVerdict::kConditional: return "conditional";
    case CertificateVerdict::kNotCertified: return "not-certified";
  }
  return "?";
}

namespace {

struct PartialBound {
  double F = 0.0;
  double I = 0.0;
  DiameterBound diam;
};

}  // namespace

CertificateReport equicontinuity_certificate(const MetricField& field, const QField& q, std::span<const double> x0,
                                             double delta0, const TargetGeometry& geom,
                                             std::span<const double> sigmas, const CertificateOptions& opts) {
  geom.validate();
  const int n = field.dim();
  if (geom.dim != n) throw DomainError("target and source dimensions differ");
  if (!(delta0 > 0.0)) throw DomainError("delta0 must be positive");
  if (!field.grid().contains_ball(x0, delta0)) throw DomainError("ball B(x0, delta0) leaves the grid");
  for (double s : sigmas) {
    if (!(s > 0.0)) throw DomainError("sigma values must be positive");
  }

  CertificateReport rep;
  rep.x0.assign(x0.begin(), x0.end());
  rep.delta0 = delta0;
  rep.geom = geom;

  auto run_fmo = [&] {
    const double hi = std::min(delta0, std::exp(-1.0));
    const std::vector<double> eps = opts.fmo_eps.empty() ? log_spaced(hi, hi * 1e-3, 13) : opts.fmo_eps;
    rep.fmo = fmo_indicator(field, q, x0, eps, opts.fmo);
  };
  auto run_c3 = [&] { rep.condition3 = condition3_test(field, q, x0, delta0, opts.condition3); };

  bool c3_inconclusive = false;
  switch (opts.branch) {
    case CriterionBranch::kCondition3:
      run_c3();
      rep.branch = CriterionBranch::kCondition3;
      rep.criterion_positive = rep.condition3->verdict == DivergenceVerdict::kDivergent;
      rep.criterion_negative = rep.condition3->verdict == DivergenceVerdict::kConvergent;
      break;
    case CriterionBranch::kFmo:
      run_fmo();
      rep.branch = CriterionBranch::kFmo;
      rep.criterion_positive = rep.fmo->verdict == FmoVerdict::kFmo;
      rep.criterion_negative = rep.fmo->verdict == FmoVerdict::kNotFmo;
      break;
    case CriterionBranch::kAuto:
      run_c3();
      if (rep.condition3->verdict == DivergenceVerdict::kDivergent) {
        rep.branch = CriterionBranch::kCondition3;
        rep.criterion_positive = true;
        break;
      }
      c3_inconclusive = rep.condition3->verdict == DivergenceVerdict::kInconclusive;
      run_fmo();
      if (rep.fmo->verdict == FmoVerdict::kFmo) {
        rep.branch = CriterionBranch::kFmo;
        rep.criterion_positive = true;
      } else {
        rep.branch = c3_inconclusive ? CriterionBranch::kCondition3 : CriterionBranch::kFmo;
        rep.criterion_negative = !c3_inconclusive && rep.fmo->verdict == FmoVerdict::kNotFmo;
      }
      break;
  }

  rep.table.reserve(sigmas.size());
  for (double s : sigmas) rep.table.push_back({s, 0.0, false, false});

  if (rep.criterion_negative) {
    rep.verdict = CertificateVerdict::kNotCertified;
    rep.notes.push_back("criterion fails at x0: no bound is computed");
    return rep;
  }

  // Radial gauge and the eps schedule.
  std::optional<PsiFunction> psi;
  if (rep.branch == CriterionBranch::kFmo) {
    rep.eps0 = std::min(delta0, std::exp(-1.0));
    psi = psi_fmo();
  } else {
    rep.eps0 = delta0;
    PsiFromQOptions po = opts.psi;
    if (po.t_min <= 0.0) po.t_min = rep.eps0 * 1e-12;
    psi = psi_from_Q(field, q, x0, rep.eps0, po).psi;
  }
  rep.psi_description = psi->description();

  const int steps = std::max(1, static_cast<int>(std::lround(opts.per_decade * opts.depth_decades)));
  std::vector<double> eps_list;
  eps_list.reserve(static_cast<std::size_t>(steps));
  for (int k = 1; k <= steps; ++k) eps_list.push_back(rep.eps0 * std::pow(10.0, -static_cast<double>(k) / opts.per_decade));

  const BoundSchedule sched = capacity_bound_schedule(field, q, *psi, x0, rep.eps0, eps_list, opts.f);
  rep.decreasing = sched.decreasing;
  rep.trend_slope = sched.trend_slope;
  for (const CapacityBound& b : sched.rows) {
    const DiameterBound d = diameter_bound(b.bound, geom);
    rep.rows.push_back({b.eps, b.F, b.I, b.bound, d.value, d.min_attained});
  }

  // Bound at an eps between two schedule rows, continuing from the larger one.
  auto bound_at = [&](double eps, double prev_eps, const PartialBound& prev) {
    PartialBound p = prev;
    p.F += F_integral(field, q, *psi, x0, eps, prev_eps, opts.f);
    p.I = psi->closed_form() ? I_integral(*psi, eps, rep.eps0)
                             : prev.I + quad::log_panels([&](double t) { return (*psi)(t); }, eps, prev_eps, 32);
    p.diam = diameter_bound(p.F / std::pow(p.I, n), geom);
    return p;
  };

  for (SigmaDelta& row : rep.table) {
    for (int pass = 0; pass < 2 && !row.reached; ++pass) {
      const bool need_min = pass == 0;
      auto ok = [&](const DiameterBound& d) { return d.value <= row.sigma && (!need_min || d.min_attained); };
      std::size_t k = 0;
      while (k < rep.rows.size() && !ok({rep.rows[k].diam_bound, rep.rows[k].min_attained})) ++k;
      if (k == rep.rows.size()) continue;
      row.reached = true;
      row.min_attained = rep.rows[k].min_attained;
      row.F = rep.rows[k].F;
      row.I = rep.rows[k].I;
      row.bound = rep.rows[k].bound;
      // Log-bisection between the failing larger eps and the passing row k.
      const double prev_eps = k == 0 ? rep.eps0 : rep.rows[k - 1].eps;
      const PartialBound prev = k == 0 ? PartialBound{} : PartialBound{rep.rows[k - 1].F, rep.rows[k - 1].I, {}};
      double good = std::log(rep.rows[k].eps);
      double bad = std::log(prev_eps);
      for (int it = 0; it < opts.bisection_steps; ++it) {
        const double m = 0.5 * (good + bad);
        const PartialBound b = bound_at(std::exp(m), prev_eps, prev);
        if (ok(b.diam)) {
          good = m;
          row.min_attained = b.diam.min_attained;
          row.F = b.F;
          row.I = b.I;
          row.bound = b.F / std::pow(b.I, n);
        } else {
          bad = m;
        }
      }
      row.delta = std::exp(good);
    }
  }

  // A delta valid for a smaller sigma is valid for every larger one.
  std::vector<std::size_t> order(rep.table.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rep.table[a].sigma < rep.table[b].sigma; });
  const SigmaDelta* best = nullptr;
  for (std::size_t idx : order) {
    SigmaDelta& row = rep.table[idx];
    if (best && best->delta > row.delta) {
      const double sigma = row.sigma;
      row = *best;
      row.sigma = sigma;
    }
    if (!best || row.delta >= best->delta) best = &row;
  }

  bool any_reached = false;
  bool all_min = true;
  for (const SigmaDelta& row : rep.table) {
    if (row.reached) {
      any_reached = true;
      all_min = all_min && row.min_attained;
    } else {
      rep.notes.push_back("sigma " + fmt(row.sigma) + " not reached within " + fmt(opts.depth_decades) +
                          " decades below eps0; delta reported as 0");
    }
  }
  if (!all_min) rep.notes.push_back("unconditional-min-not-established for at least one sigma");
  if (!rep.decreasing) rep.notes.push_back("capacity bound is not nonincreasing along the schedule");
  if (!rep.criterion_positive) rep.notes.push_back("criterion inconclusive at x0");

  rep.verdict = rep.criterion_positive && rep.decreasing && any_reached && all_min ? CertificateVerdict::kCertified
                                                                                 : CertificateVerdict::kConditional;
  return rep;
}

// ------------------------------------------------------------ Loewner calibration

CurveFamily connecting_family(const MetricField& field, const LoewnerFixture& fx, int per_side, std::uint64_t seed) {
  const int n = field.dim();
  const auto un = static_cast<std::size_t>(n);
  if (fx.e0.size() != un || fx.e1.size() != un || fx.f0.size() != un || fx.f1.size() != un) {
    throw DomainError("fixture points have the wrong dimension");
  }
  if (per_side < 1) throw DomainError("per_side must be >= 1");
  const double step = 0.25 * field.grid().min_spacing();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;

  auto on = [&](const Point& a, const Point& b, int i) {
    Point p(un);
    const double s = (i + 0.5) / per_side;
    for (std::size_t d = 0; d < un; ++d) p[d] = a[d] + s * (b[d] - a[d]);
    return p;
  };
  auto inside = [&](const Point& p) {
    return norm_between(p, Point(un, 0.0)) < fx.R && field.grid().contains(p);
  };

  CurveFamily fam;
  fam.kind = FamilyKind::kUserSupplied;
  fam.seed = seed;
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      const Point a = on(fx.e0, fx.e1, i);
      const Point b = on(fx.f0, fx.f1, j);
      Eigen::VectorXd chord(n), perp(n);
      for (int d = 0; d < n; ++d) chord(d) = b[static_cast<std::size_t>(d)] - a[static_cast<std::size_t>(d)];
      const double len = chord.norm();
      if (!(len > 0.0)) continue;
      if (n == 2) {
        perp << -chord(1), chord(0);
      } else {
        for (int d = 0; d < n; ++d) perp(d) = gauss(rng);
        perp -= perp.dot(chord) / (len * len) * chord;
      }
      perp.normalize();
      for (double bend : {0.0, 0.2, -0.2, 0.4, -0.4}) {
        // Quadratic Bezier with control point offset by bend * len.
        Point ctrl(un);
        for (std::size_t d = 0; d < un; ++d) ctrl[d] = 0.5 * (a[d] + b[d]) + bend * len * perp(static_cast<Eigen::Index>(d));
        const int segs = std::max(2, static_cast<int>(std::ceil(len * (1.0 + 2 * std::abs(bend)) / step)));
        CurvePolyline c;
        c.vertices.reserve(static_cast<std::size_t>(segs) + 1);
        bool ok = true;
        for (int s = 0; s <= segs && ok; ++s) {
          const double t = static_cast<double>(s) / segs;
          Point p(un);
          for (std::size_t d = 0; d < un; ++d) {
            p[d] = (1 - t) * (1 - t) * a[d] + 2 * (1 - t) * t * ctrl[d] + t * t * b[d];
          }
          ok = inside(p);
          c.vertices.push_back(std::move(p));
        }
        if (ok) fam.curves.push_back(std::move(c));
      }
    }
  }
  return fam;
}

std::vector<LoewnerFixture> default_loewner_fixtures(int dim) {
  auto pt = [dim](double x, double y, double z = 0.0) {
    Point p(static_cast<std::size_t>(dim), 0.0);
    p[0] = x;
    p[1] = y;
    if (dim > 2) p[2] = z;
    return p;
  };
  return {
      {"parallel-0.5-apart-1", pt(-0.5, -0.25), pt(-0.5, 0.25), pt(0.5, -0.25), pt(0.5, 0.25), 1.0},
      {"parallel-0.5-apart-0.3", pt(-0.15, -0.25), pt(-0.15, 0.25), pt(0.15, -0.25), pt(0.15, 0.25), 1.0},
      {"short-vs-long", pt(-0.7, -0.1), pt(-0.7, 0.1), pt(0.6, -0.5), pt(0.6, 0.5), 1.0},
      {"collinear", pt(-0.8, 0.0), pt(-0.3, 0.0), pt(0.3, 0.0), pt(0.8, 0.0), 1.0},
      {"skew", pt(-0.6, 0.2), pt(-0.1, 0.5), pt(0.1, -0.5), pt(0.6, -0.2), 1.0},
      {"tiny-far", pt(-0.8, -0.05), pt(-0.8, 0.05), pt(0.8, -0.05), pt(0.8, 0.05), 1.0},
  };
}

std::vector<LoewnerSample> loewner_calibration_suite(std::span<const LoewnerFixture> fixtures, int dim, int cells,
                                                     int per_side) {
  std::vector<LoewnerSample> out;
  for (const LoewnerFixture& fx : fixtures) {
    const MetricField field = MetricField::euclidean(ChartGrid::cube(dim, -1.1 * fx.R, 1.1 * fx.R, cells));
    const CurveFamily fam = connecting_family(field, fx, per_side, 0);
    LoewnerSample s;
    s.name = fx.name;
    s.diam_E = norm_between(fx.e0, fx.e1);
    s.diam_F = norm_between(fx.f0, fx.f1);
    s.R = fx.R;
    s.modulus = modulus_lower(fam, field).value;
    s.ratio = s.modulus > 0.0 ? std::min(s.diam_E, s.diam_F) / (fx.R * s.modulus) : kInf;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ringmod
