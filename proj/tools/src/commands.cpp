#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include "ringmod/condenser.hpp"
#include "ringmod/equicontinuity.hpp"
#include "ringmod/error.hpp"
#include "ringmod/q_analysis.hpp"

#ifndef RINGMOD_VERSION
#define RINGMOD_VERSION "0.0.0"
#endif

namespace ringmod::cli {

using nlohmann::json;

namespace {

// Non-finite doubles become the strings "inf", "-inf" and "nan" so that the
// report stays valid JSON.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

double unit_sphere_area(int n) { return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n); }

/// Exit code and status word of a finished command.
struct Outcome {
  int code = kExitOk;
  std::string status = "ok";
};

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

class Session {
 public:
  Session(RunConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

  ChartGrid grid() {
    const int dim = cfg_.integer("grid", "dim", 2);
    if (dim < 2 || dim > 8) throw ConfigError("[grid] dim must be in 2..8");
    const double lo = cfg_.number("grid", "lo", -1.0);
    const double hi = cfg_.number("grid", "hi", 1.0);
    const int cells = cfg_.integer("grid", "cells", 64);
    if (!(hi > lo) || cells < 2) throw ConfigError("[grid] needs hi > lo and cells >= 2");
    return ChartGrid::cube(dim, lo, hi, cells);
  }

  MetricField metric(const ChartGrid& g) {
    const std::string kind = cfg_.text("metric", "kind", "euclidean");
    const int n = g.dim();
    if (kind == "euclidean") return MetricField::euclidean(g);
    if (kind == "conformal") {
      return MetricField::conformal(g, Expression::parse_chart(cfg_.text("metric", "factor"), n));
    }
    if (kind == "matrix") {
      std::vector<Expression> table;
      for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
          const std::string key = "g" + std::to_string(i) + std::to_string(j);
          const std::string mirror = "g" + std::to_string(j) + std::to_string(i);
          std::string text;
          if (cfg_.has("metric", key)) {
            text = cfg_.text("metric", key);
          } else if (cfg_.has("metric", mirror)) {
            text = cfg_.text("metric", mirror);
          } else {
            text = cfg_.text("metric", key, i == j ? "1" : "0");
          }
          table.push_back(Expression::parse_chart(text, n));
        }
      }
      return MetricField::matrix(g, table);
    }
    throw ConfigError("[metric] kind must be euclidean, conformal or matrix, got '" + kind + "'");
  }

  Point point(const std::string& section, const std::string& key, int dim) {
    const std::vector<double> v = cfg_.numbers(section, key, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    if (static_cast<int>(v.size()) != dim) {
      throw ConfigError("[" + section + "] " + key + " needs " + std::to_string(dim) + " coordinates");
    }
    return v;
  }

  QField qfield(int dim) {
    const std::string text = cfg_.text("q", "expr", "1");
    std::vector<Point> singular;
    if (cfg_.has("q", "singular")) singular.push_back(point("q", "singular", dim));
    const bool integrable = cfg_.boolean("q", "integrable", true);
    const Expression e = Expression::parse_chart(text, dim);
    return QField::expression(e, singular, integrable);
  }

  RingSpec ring(const ChartGrid& g) {
    RingSpec r;
    r.center = point("ring", "center", g.dim());
    r.r1 = cfg_.number("ring", "r1");
    r.r2 = cfg_.number("ring", "r2");
    const std::string mode = cfg_.text("ring", "mode", "chart");
    if (mode == "chart") {
      r.mode = DistanceMode::kChartEuclidean;
    } else if (mode == "geodesic") {
      r.mode = DistanceMode::kGeodesic;
    } else {
      throw ConfigError("[ring] mode must be chart or geodesic");
    }
    r.validate(g);
    return r;
  }

  SphereQuadrature quadrature() {
    SphereQuadrature q;
    q.min_points = cfg_.integer("quadrature", "min_points", q.min_points);
    q.max_points = cfg_.integer("quadrature", "max_points", q.max_points);
    q.rel_tol = cfg_.number("quadrature", "rel_tol", q.rel_tol);
    return q;
  }

  BracketPlan bracket_plan() {
    BracketPlan p;
    p.curve_count = cfg_.integer("solver", "curve_count", 0);
    p.perturbation = cfg_.integer("solver", "perturbation", 0);
    p.solver.max_sweeps = cfg_.integer("solver", "max_sweeps", p.solver.max_sweeps);
    p.solver.rel_gap = cfg_.number("solver", "rel_gap", p.solver.rel_gap);
    p.seed = seed_;
    p.quad = quadrature();
    return p;
  }

  CapacityOptions capacity_options() {
    CapacityOptions o;
    o.max_outer = cfg_.integer("capacity", "max_outer", o.max_outer);
    o.damping = cfg_.number("capacity", "damping", o.damping);
    o.regularization = cfg_.number("capacity", "regularization", o.regularization);
    o.energy_rel_tol = cfg_.number("capacity", "energy_rel_tol", o.energy_rel_tol);
    o.cg_rel_tol = cfg_.number("capacity", "cg_rel_tol", o.cg_rel_tol);
    o.cg_max_iterations = cfg_.integer("capacity", "cg_max_iterations", o.cg_max_iterations);
    return o;
  }

  Condenser condenser(const ChartGrid& g) {
    const std::string type = cfg_.text("condenser", "type", "round");
    const int n = g.dim();
    if (type == "round") {
      return Condenser::round(g, point("condenser", "center", n), cfg_.number("condenser", "r_inner"),
                              cfg_.number("condenser", "r_outer"));
    }
    if (type == "box") {
      auto req = [&](const std::string& key) {
        if (!cfg_.has("condenser", key)) throw ConfigError("missing required key [condenser] " + key);
        return point("condenser", key, n);
      };
      return Condenser::box(g, req("a_lo"), req("a_hi"), req("c_lo"), req("c_hi"));
    }
    throw ConfigError("[condenser] type must be round or box");
  }

  TargetGeometry target(int dim) {
    TargetGeometry t;
    t.dim = dim;
    t.R = cfg_.number("target", "R", t.R);
    t.diam_K = cfg_.number("target", "diam_K", t.diam_K);
    t.q_tilde = cfg_.number("target", "q_tilde", static_cast<double>(dim));
    t.C_loewner = cfg_.number("target", "C", kCalibratedLoewnerConstant);
    t.validate();
    return t;
  }

  MappingSpec mapping(int dim) {
    const std::string kind = cfg_.text("mapping", "kind", "identity");
    if (kind == "identity") return MappingSpec::identity(dim);
    if (kind == "radial-stretch") {
      return MappingSpec::radial_stretch(dim, cfg_.number("mapping", "alpha"), point("mapping", "center", dim));
    }
    if (kind == "winding") {
      if (dim != 2) throw ConfigError("winding maps need [grid] dim = 2");
      return MappingSpec::winding(cfg_.integer("mapping", "k", 2), point("mapping", "center", dim));
    }
    if (kind == "linear") {
      const std::vector<double> m = cfg_.numbers("mapping", "matrix");
      if (static_cast<int>(m.size()) != dim * dim) {
        throw ConfigError("[mapping] matrix needs " + std::to_string(dim * dim) + " row-major entries");
      }
      Eigen::MatrixXd a(dim, dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) a(i, j) = m[static_cast<std::size_t>(i * dim + j)];
      }
      return MappingSpec::linear(a);
    }
    if (kind == "user") {
      std::vector<Expression> comps;
      for (int i = 1; i <= dim; ++i) {
        comps.push_back(Expression::parse_chart(cfg_.text("mapping", "f" + std::to_string(i)), dim));
      }
      return MappingSpec::user(comps);
    }
    throw ConfigError("[mapping] kind must be identity, radial-stretch, winding, linear or user");
  }

  RunConfig& cfg() { return cfg_; }
  std::uint64_t seed() const { return seed_; }

 private:
  RunConfig& cfg_;
  std::uint64_t seed_;
};

json bracket_json(const ModulusBracket& b) {
  return {{"lower", num(b.lower)},
          {"upper", num(b.upper)},
          {"program_lower", num(b.program_lower)},
          {"flux_lower", num(b.flux_lower)},
          {"width", num(b.width())},
          {"iterations", b.iterations},
          {"lower_converged", b.lower_converged},
          {"upper_certified", b.upper_certified},
          {"curve_count", b.curve_count}};
}

json capacity_json(const CapacityResult& c) {
  return {{"value", num(c.value)},
          {"outer_iterations", c.outer_iterations},
          {"cg_iterations", c.cg_iterations},
          {"converged", c.converged}};
}

json fmo_json(const FmoReport& r) {
  return {{"eps", nums(r.eps)},
          {"mean", nums(r.mean)},
          {"oscillation", nums(r.oscillation)},
          {"slope", num(r.slope)},
          {"residual", num(r.residual)},
          {"ratio", num(r.ratio)},
          {"limsup_estimate", num(r.limsup_estimate)},
          {"verdict", to_string(r.verdict)}};
}

json condition3_json(const Condition3Report& r) {
  return {{"delta", num(r.delta)},
          {"dim", r.dim},
          {"t", nums(r.t)},
          {"a", nums(r.a)},
          {"integrand", nums(r.integrand)},
          {"partial_integral", nums(r.partial)},
          {"slope", num(r.slope)},
          {"log_power", num(r.log_power)},
          {"residual", num(r.residual)},
          {"tail_estimate", num(r.tail_estimate)},
          {"degenerate_shells", r.degenerate_shells},
          {"verdict", to_string(r.verdict)}};
}

json geometry_json(const TargetGeometry& g) {
  return {{"dim", g.dim}, {"R", num(g.R)}, {"diam_K", num(g.diam_K)}, {"q_tilde", num(g.exponent())},
          {"C_loewner", num(g.C_loewner)}};
}

Outcome cmd_modulus(Session& s, json& out, Csv&) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const RingSpec ring = s.ring(g);
  const ModulusBracket b = modulus_bracket(ring, field, s.bracket_plan());
  out["bracket"] = bracket_json(b);
  if (field.is_euclidean() && ring.mode == DistanceMode::kChartEuclidean) {
    const int n = g.dim();
    const double ref = unit_sphere_area(n) * std::pow(std::log(ring.r2 / ring.r1), 1 - n);
    out["euclidean_reference"] = num(ref);
    out["contains_reference"] = b.contains(ref);
  }
  if (!b.lower_converged) return {kExitNonConvergence, "non-convergence"};
  return {};
}

Outcome cmd_capacity(Session& s, json& out, Csv&) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const Condenser cond = s.condenser(g);
  const CapacityResult c = capacity(cond, field, s.capacity_options());
  out["condenser"] = {{"description", cond.description()},
                      {"plate_nodes", cond.plate_nodes()},
                      {"free_nodes", cond.free_nodes()}};
  out["capacity"] = capacity_json(c);
  if (!c.converged) return {kExitNonConvergence, "non-convergence"};
  return {};
}

Outcome cmd_cap_vs_modulus(Session& s, json& out, Csv&) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const Condenser cond = s.condenser(g);
  CapModulusOptions o;
  o.tol = s.cfg().number("check", "tol", o.tol);
  o.capacity = s.capacity_options();
  o.bracket = s.bracket_plan();
  const CapModulusReport r = cap_equals_modulus_check(cond, field, o);
  out["capacity"] = capacity_json(r.cap);
  out["bracket"] = bracket_json(r.bracket);
  out["midpoint"] = num(r.midpoint());
  out["tol_abs"] = num(r.tol_abs);
  out["agree"] = r.agree;
  if (!r.cap.converged || !r.bracket.lower_converged) return {kExitNonConvergence, "non-convergence"};
  if (!r.agree) return {kExitHypothesis, "cap = M(Gamma_E) check failed"};
  return {};
}

Outcome cmd_fmo(Session& s, json& out, Csv& csv) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const QField q = s.qfield(g.dim());
  const Point x0 = s.point("analysis", "x0", g.dim());
  const double hi = s.cfg().number("analysis", "eps_hi", 0.5 * default_delta(g, x0));
  const double lo = s.cfg().number("analysis", "eps_lo", hi * 1e-3);
  const int count = s.cfg().integer("analysis", "eps_count", 13);
  FmoOptions o;
  o.slope_threshold = s.cfg().number("fmo", "slope_threshold", o.slope_threshold);
  o.residual_max = s.cfg().number("fmo", "residual_max", o.residual_max);
  o.ratio_max = s.cfg().number("fmo", "ratio_max", o.ratio_max);
  o.quad = s.quadrature();
  const FmoReport r = fmo_indicator(field, q, x0, log_spaced(hi, lo, count), o);
  out["fmo"] = fmo_json(r);
  csv.header = {"eps", "mean", "oscillation"};
  for (std::size_t i = 0; i < r.eps.size(); ++i) csv.rows.push_back({r.eps[i], r.mean[i], r.oscillation[i]});
  return {};
}

Condition3Options condition3_options(Session& s) {
  Condition3Options o;
  o.t_min = s.cfg().number("condition3", "t_min", o.t_min);
  o.per_decade = s.cfg().integer("condition3", "per_decade", o.per_decade);
  o.slope_band = s.cfg().number("condition3", "slope_band", o.slope_band);
  o.log_power_divergent = s.cfg().number("condition3", "log_power_divergent", o.log_power_divergent);
  o.log_power_convergent = s.cfg().number("condition3", "log_power_convergent", o.log_power_convergent);
  o.quad = s.quadrature();
  return o;
}

Outcome cmd_condition3(Session& s, json& out, Csv& csv) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const QField q = s.qfield(g.dim());
  const Point x0 = s.point("analysis", "x0", g.dim());
  const double delta = s.cfg().number("analysis", "delta", default_delta(g, x0));
  const Condition3Report r = condition3_test(field, q, x0, delta, condition3_options(s));
  out["condition3"] = condition3_json(r);
  csv.header = {"t", "a(t)", "integrand", "partial_integral"};
  for (std::size_t i = 0; i < r.t.size(); ++i) csv.rows.push_back({r.t[i], r.a[i], r.integrand[i], r.partial[i]});
  return {};
}

Outcome cmd_bound(Session& s, json& out, Csv& csv) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const QField q = s.qfield(g.dim());
  const Point x0 = s.point("analysis", "x0", g.dim());
  const double eps0 = s.cfg().number("bound", "eps0", default_delta(g, x0));
  const std::string kind = s.cfg().text("bound", "psi", "from-q");
  std::optional<PsiFunction> psi;
  if (kind == "from-q") {
    PsiFromQOptions po;
    po.t_min = s.cfg().number("bound", "t_min", eps0 * 1e-6);
    po.per_decade = s.cfg().integer("bound", "table_per_decade", po.per_decade);
    po.quad = s.quadrature();
    psi = psi_from_Q(field, q, x0, eps0, po).psi;
  } else if (kind == "fmo") {
    psi = psi_fmo();
  } else if (kind == "power") {
    psi = PsiFunction::power(s.cfg().number("bound", "c", 1.0), s.cfg().number("bound", "p", -1.0));
  } else {
    throw ConfigError("[bound] psi must be from-q, fmo or power");
  }
  const std::vector<double> eps = s.cfg().numbers("bound", "eps", {eps0 / 10, eps0 / 100, eps0 / 1000});
  FOptions fo;
  fo.per_decade = s.cfg().integer("bound", "per_decade", fo.per_decade);
  fo.quad = s.quadrature();
  const BoundSchedule sched = capacity_bound_schedule(field, q, *psi, x0, eps0, eps, fo);
  json rows = json::array();
  csv.header = {"eps", "F", "I", "bound"};
  for (const CapacityBound& b : sched.rows) {
    rows.push_back({{"eps", num(b.eps)}, {"F", num(b.F)}, {"I", num(b.I)}, {"bound", num(b.bound)}});
    csv.rows.push_back({b.eps, b.F, b.I, b.bound});
  }
  out["psi"] = psi->description();
  out["eps0"] = num(eps0);
  out["rows"] = rows;
  out["decreasing"] = sched.decreasing;
  out["trend_slope"] = num(sched.trend_slope);
  return {};
}

Outcome cmd_certificate(Session& s, json& out, Csv& csv) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const QField q = s.qfield(g.dim());
  const Point x0 = s.point("analysis", "x0", g.dim());
  const double delta0 = s.cfg().number("analysis", "delta", default_delta(g, x0));
  const TargetGeometry geom = s.target(g.dim());
  const std::vector<double> sigmas = s.cfg().numbers("certificate", "sigmas", {0.25, 0.5, 1.0});
  CertificateOptions o;
  const std::string branch = s.cfg().text("certificate", "branch", "auto");
  if (branch == "auto") {
    o.branch = CriterionBranch::kAuto;
  } else if (branch == "fmo") {
    o.branch = CriterionBranch::kFmo;
  } else if (branch == "condition3") {
    o.branch = CriterionBranch::kCondition3;
  } else {
    throw ConfigError("[certificate] branch must be auto, fmo or condition3");
  }
  o.per_decade = s.cfg().integer("certificate", "per_decade", o.per_decade);
  o.depth_decades = s.cfg().number("certificate", "depth_decades", o.depth_decades);
  o.bisection_steps = s.cfg().integer("certificate", "bisection_steps", o.bisection_steps);
  o.f.quad = s.quadrature();
  o.fmo.quad = o.f.quad;
  o.condition3 = condition3_options(s);
  o.psi.quad = o.f.quad;
  const CertificateReport r = equicontinuity_certificate(field, q, x0, delta0, geom, sigmas, o);

  json rows = json::array();
  for (const CertificateRow& c : r.rows) {
    rows.push_back({{"eps", num(c.eps)},
                    {"F", num(c.F)},
                    {"I", num(c.I)},
                    {"bound", num(c.bound)},
                    {"diam_bound", num(c.diam_bound)},
                    {"min_attained", c.min_attained}});
  }
  json table = json::array();
  csv.header = {"sigma", "delta", "F", "I", "bound"};
  for (const SigmaDelta& t : r.table) {
    table.push_back({{"sigma", num(t.sigma)},
                     {"delta", num(t.delta)},
                     {"reached", t.reached},
                     {"min_attained", t.min_attained},
                     {"F", num(t.F)},
                     {"I", num(t.I)},
                     {"bound", num(t.bound)}});
    if (t.reached) csv.rows.push_back({t.sigma, t.delta, t.F, t.I, t.bound});
  }
  out["x0"] = nums(r.x0);
  out["delta0"] = num(r.delta0);
  out["eps0"] = num(r.eps0);
  out["geometry"] = geometry_json(r.geom);
  out["branch"] = to_string(r.branch);
  out["criterion_positive"] = r.criterion_positive;
  out["criterion_negative"] = r.criterion_negative;
  if (r.fmo) out["fmo"] = fmo_json(*r.fmo);
  if (r.condition3) out["condition3"] = condition3_json(*r.condition3);
  out["psi"] = r.psi_description;
  out["rows"] = rows;
  out["decreasing"] = r.decreasing;
  out["trend_slope"] = num(r.trend_slope);
  out["table"] = table;
  out["verdict"] = to_string(r.verdict);
  out["notes"] = r.notes;
  if (r.verdict == CertificateVerdict::kNotCertified) return {kExitHypothesis, "not-certified"};
  return {};
}

Outcome cmd_zoo_verify(Session& s, json& out, Csv&) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const RingSpec ring = s.ring(g);
  const MappingSpec f = s.mapping(g.dim());
  const std::string source = s.cfg().text("q", "source", "dilatation");
  std::optional<QField> q;
  if (source == "dilatation") {
    q = dilatation_field(f, field);
  } else if (source == "expr") {
    q = s.qfield(g.dim());
  } else {
    throw ConfigError("[q] source must be dilatation or expr");
  }
  const double scale = s.cfg().number("q", "scale", 1.0);
  if (scale != 1.0) q = q->scaled(scale);

  std::vector<EtaFunction> etas;
  for (const std::string& name : s.cfg().words("eta", "list", {"extremal", "constant"})) {
    if (name == "extremal") {
      etas.push_back(EtaFunction::extremal(ring.r1, ring.r2));
    } else if (name == "constant") {
      etas.push_back(EtaFunction::constant(ring.r1, ring.r2));
    } else {
      throw ConfigError("[eta] list entries must be extremal or constant");
    }
  }
  RingQOptions o;
  o.bracket = s.bracket_plan();
  o.target_cells = s.cfg().integer("zoo", "target_cells", o.target_cells);
  o.eta_tol = s.cfg().number("zoo", "eta_tol", o.eta_tol);
  o.rel_tol = s.cfg().number("zoo", "rel_tol", o.rel_tol);
  o.quad = s.quadrature();
  const RingQReport r = ring_q_verify(f, field, ring, *q, etas, o);

  json checks = json::array();
  for (const EtaCheck& c : r.etas) {
    checks.push_back({{"eta", c.description},
                      {"normalization", num(c.normalization)},
                      {"accepted", c.accepted},
                      {"right_side", num(c.right_side)},
                      {"pass", c.pass}});
  }
  out["mapping"] = {{"kind", to_string(f.kind())}, {"description", f.description()}};
  out["q"] = q->description();
  out["image"] = {{"center", nums(r.image_center)},
                  {"r1", num(r.image_r1)},
                  {"r2", num(r.image_r2)},
                  {"is_ring", r.image_is_ring},
                  {"lower", num(r.image_lower)},
                  {"upper", num(r.image_upper)},
                  {"program_lower", num(r.image_program_lower)},
                  {"flux_lower", num(r.image_flux_lower)},
                  {"curves", r.curves}};
  out["etas"] = checks;
  out["pass"] = r.pass;
  if (!r.pass) return {kExitHypothesis, "ring Q-inequality violated"};
  return {};
}

Outcome cmd_ahlfors(Session& s, json& out, Csv& csv) {
  const ChartGrid g = s.grid();
  const MetricField field = s.metric(g);
  const Point c = s.point("ahlfors", "center", g.dim());
  const std::vector<double> radii = s.cfg().numbers("ahlfors", "radii", {0.1, 0.2, 0.4});
  const std::string mode = s.cfg().text("ahlfors", "mode", "chart");
  if (mode != "chart" && mode != "geodesic") throw ConfigError("[ahlfors] mode must be chart or geodesic");
  const AhlforsReport r = ahlfors_probe(field, c, radii,
                                        mode == "chart" ? DistanceMode::kChartEuclidean : DistanceMode::kGeodesic);
  out["ahlfors"] = {{"q_fit", num(r.q_fit)},
                    {"prefactor", num(r.prefactor)},
                    {"c_fit", num(r.c_fit)},
                    {"residual", num(r.residual)},
                    {"consistent_with_dim", r.consistent_with_dim},
                    {"radii", nums(r.radii)},
                    {"volumes", nums(r.volumes)}};
  csv.header = {"radius", "volume"};
  for (std::size_t i = 0; i < r.radii.size(); ++i) csv.rows.push_back({r.radii[i], r.volumes[i]});
  return {};
}

using Handler = Outcome (*)(Session&, json&, Csv&);

Handler handler_for(const std::string& command) {
  if (command == "modulus") return cmd_modulus;
  if (command == "capacity") return cmd_capacity;
  if (command == "cap-vs-modulus") return cmd_cap_vs_modulus;
  if (command == "fmo") return cmd_fmo;
  if (command == "condition3") return cmd_condition3;
  if (command == "bound") return cmd_bound;
  if (command == "certificate") return cmd_certificate;
  if (command == "zoo-verify") return cmd_zoo_verify;
  if (command == "ahlfors") return cmd_ahlfors;
  return nullptr;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << text;
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::string csv_text(const Csv& csv) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < csv.header.size(); ++i) os << (i ? "," : "") << csv.header[i];
  os << "\n";
  for (const auto& row : csv.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

json error_json(const std::string& type, const std::string& message, const std::string& hypothesis = {}) {
  json e = {{"type", type}, {"message", message}};
  if (!hypothesis.empty()) e["hypothesis"] = hypothesis;
  return e;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"modulus", "capacity",    "cap-vs-modulus", "fmo",    "condition3",
                                                 "bound",   "certificate", "zoo-verify",     "ahlfors"};
  return names;
}

const char* toolkit_version() { return RINGMOD_VERSION; }

RunResult run(const RunOptions& opts, RunConfig cfg) {
  RunResult res;
  json report;
  report["command"] = opts.command;
  report["version"] = toolkit_version();
  report["schema"] = kSchemaVersion;
  Csv csv;
  Outcome outcome;
  if (opts.seed) cfg.set("run", "seed", std::to_string(*opts.seed));

  try {
    const Handler h = handler_for(opts.command);
    if (!h) throw ConfigError("unknown command '" + opts.command + "'");
    const double seed_value = cfg.number("run", "seed", 0.0);
    if (seed_value < 0 || seed_value != std::floor(seed_value)) throw ConfigError("[run] seed must be a nonnegative integer");
    const auto seed = static_cast<std::uint64_t>(seed_value);
    report["seed"] = seed;
    Session session(cfg, seed);
    json result = json::object();
    outcome = h(session, result, csv);
    report["result"] = result;
  } catch (const HypothesisError& e) {
    outcome = {kExitHypothesis, "hypothesis-failure"};
    report["error"] = error_json("hypothesis", e.what(), e.hypothesis());
  } catch (const IntegrationError& e) {
    outcome = {kExitHypothesis, "hypothesis-failure"};
    report["error"] = error_json("integration", e.what(), "Q locally integrable on the annulus");
  } catch (const ParseError& e) {
    outcome = {kExitConfig, "config-error"};
    report["error"] = error_json("parse", e.what());
  } catch (const ConfigError& e) {
    outcome = {kExitConfig, "config-error"};
    report["error"] = error_json("config", e.what());
  } catch (const DegenerateCondenserError& e) {
    outcome = {kExitConfig, "config-error"};
    report["error"] = error_json("degenerate-condenser", e.what(), "C compact in A, C nonempty");
  } catch (const DomainError& e) {
    outcome = {kExitConfig, "config-error"};
    report["error"] = error_json("domain", e.what());
  } catch (const MetricIntegrityError& e) {
    outcome = {kExitConfig, "config-error"};
    report["error"] = error_json("metric", e.what(), "g symmetric positive definite");
  } catch (const Error& e) {
    outcome = {kExitConfig, "error"};
    report["error"] = error_json("error", e.what());
  }

  report["exit_code"] = outcome.code;
  report["status"] = outcome.status;
  report["config"] = cfg.effective();
  report["ignored_keys"] = cfg.unused();

  res.exit_code = outcome.code;
  try {
    const std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);
    const std::string stem = opts.command.empty() ? "report" : opts.command;
    res.json_path = (dir / (stem + ".json")).string();
    write_text(res.json_path, report.dump(2) + "\n");
    if (opts.csv && !csv.header.empty()) {
      res.csv_path = (dir / (stem + ".csv")).string();
      write_text(*res.csv_path, csv_text(csv));
    }
  } catch (const std::exception& e) {
    report["error"] = error_json("io", e.what());
    res.exit_code = kExitConfig;
  }
  res.report = std::move(report);
  return res;
}

RunResult run_file(const RunOptions& opts, const std::string& config_path) {
  std::optional<RunConfig> cfg;
  try {
    cfg = RunConfig::load(config_path);
  } catch (const Error& e) {
    RunResult res;
    res.exit_code = kExitConfig;
    res.report = {{"command", opts.command},
                  {"version", toolkit_version()},
                  {"schema", kSchemaVersion},
                  {"exit_code", kExitConfig},
                  {"status", "config-error"},
                  {"error", error_json("config", e.what())}};
    try {
      const std::filesystem::path dir(opts.out_dir);
      std::filesystem::create_directories(dir);
      res.json_path = (dir / (opts.command + ".json")).string();
      write_text(res.json_path, res.report.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    return res;
  }
  return run(opts, std::move(*cfg));
}

int main_entry(int argc, char** argv) {
  CLI::App app{"ringmod: conformal modulus, capacity and equicontinuity toolkit"};
  app.set_version_flag("--version", std::string(toolkit_version()));
  std::string command;
  std::string config;
  RunOptions opts;
  std::uint64_t seed = 0;
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(command_names()));
  app.add_option("--config", config, "Configuration file")->required();
  app.add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides [run] seed)");
  app.add_flag("--csv", opts.csv, "Also write a CSV table");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  opts.command = command;
  if (seed_opt->count() > 0) opts.seed = seed;
  const RunResult res = run_file(opts, config);
  if (res.report.contains("error")) {
    const json& e = res.report["error"];
    std::cerr << "ringmod " << command << ": " << e.value("message", std::string("error"));
    if (e.contains("hypothesis")) std::cerr << " [hypothesis: " << e["hypothesis"].get<std::string>() << "]";
    std::cerr << "\n";
  } else {
    std::cout << res.report.value("status", std::string("ok")) << ": " << res.json_path << "\n";
  }
  return res.exit_code;
}

}  // namespace ringmod::cli
