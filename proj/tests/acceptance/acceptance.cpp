// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "oracles.hpp"
#include "ringmod/condenser.hpp"
#include "ringmod/equicontinuity.hpp"
#include "ringmod/q_analysis.hpp"

using namespace ringmod;
namespace fs = std::filesystem;

namespace tol {
constexpr double kWidth2d = 0.10;        // bracket width relative to 2 pi
constexpr double kRuntime2d = 60.0;      // seconds
constexpr int kMinCurves2d = 256;
constexpr double kWidth3d = 0.15;        // relative to 4 pi
constexpr double kRuntime3d = 300.0;
constexpr double kCapMidpoint = 0.07;    // |cap - midpoint| / analytic
constexpr double kAxiomAbs = 1e-3;
constexpr int kAxiomFamilies = 20;
constexpr double kAxiomRuntime = 120.0;
constexpr double kBoundRel = 0.05;
constexpr double kFEqualsI = 0.01;
constexpr double kZooClosedForm = 0.05;
}  // namespace tol

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
  std::printf("%s criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run_criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  try {
    report(id, title, body());
  } catch (const std::exception& e) {
    report(id, title, {false, std::string("exception: ") + e.what()});
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

QField planar_q(const std::string& text) {
  return QField::expression(Expression::parse_chart(text, 2), {{0.0, 0.0}});
}

MetricField unit_square(int cells) { return MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, cells)); }

const Point kOrigin2{0.0, 0.0};

// ------------------------------------------------------------ 1, 2

Outcome annulus(int dim, int cells, double width_tol, double runtime_tol, int min_curves) {
  const auto t0 = Clock::now();
  const auto field = MetricField::euclidean(ChartGrid::cube(dim, -3.0, 3.0, cells));
  const RingSpec ring{Point(static_cast<std::size_t>(dim), 0.0), 1.0, oracle::kE};
  const auto b = modulus_bracket(ring, field);
  const double secs = seconds_since(t0);
  const double exact = oracle::annulus_modulus(dim, 1.0, oracle::kE);
  const double width = b.width() / exact;
  Outcome o;
  o.pass = b.contains(exact) && width <= width_tol && secs < runtime_tol && b.curve_count >= min_curves;
  std::ostringstream os;
  os << "bracket [" << b.lower << ", " << b.upper << "] vs " << exact << ", width " << 100 * width << "% (<= "
     << 100 * width_tol << "%), curves " << b.curve_count << ", " << secs << " s (< " << runtime_tol << " s)";
  o.detail = os.str();
  return o;
}

// ------------------------------------------------------------ 3

Outcome cap_vs_modulus() {
  struct Case {
    int dim, cells;
    double half;
  };
  const Case cases[] = {{2, 256, 3.0}, {3, 96, 2.75}};
  Outcome o{true, ""};
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const auto grid = ChartGrid::cube(c.dim, -c.half, c.half, c.cells);
    const auto field = MetricField::euclidean(grid);
    const auto cond = Condenser::round(grid, Point(static_cast<std::size_t>(c.dim), 0.0), 1.0, oracle::kE);
    const auto rep = cap_equals_modulus_check(cond, field);
    const double exact = oracle::annulus_modulus(c.dim, 1.0, oracle::kE);
    const double dev = std::abs(rep.cap.value - rep.midpoint()) / exact;
    const bool ok = dev <= tol::kCapMidpoint && rep.cap.converged;
    o.pass = o.pass && ok;
    std::ostringstream os;
    os << (o.detail.empty() ? "" : "; ") << c.dim << "D " << c.cells << "^" << c.dim << ": cap " << rep.cap.value
       << ", midpoint " << rep.midpoint() << ", |diff|/analytic " << 100 * dev << "% (<= " << 100 * tol::kCapMidpoint
       << "%), " << seconds_since(t0) << " s";
    o.detail += os.str();
  }
  return o;
}

// ------------------------------------------------------------ 4

std::vector<CurveFamily> random_families(const MetricField& field, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CurveFamily> fams;
  for (int i = 0; i < tol::kAxiomFamilies; ++i) {
    const RingSpec ring{{0.6 * u(g) - 0.3, 0.6 * u(g) - 0.3}, 0.4 + 0.5 * u(g), 1.5 + 0.9 * u(g)};
    const int count = 12 + static_cast<int>(24 * u(g));
    fams.push_back(sample_ring_curves(field, ring, count, i % 3, seed + static_cast<std::uint64_t>(i)));
  }
  return fams;
}

Outcome axioms() {
  const auto t0 = Clock::now();
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 64));
  const auto fams = random_families(field, 2024);
  AxiomOptions opts;
  opts.tol = tol::kAxiomAbs;
  const auto rep = modulus_axiom_suite(field, fams, opts);
  const double secs = seconds_since(t0);
  bool empty_exact = true;
  double worst = -1e300;
  for (const auto& c : rep.checks) {
    if (c.axiom == "empty") empty_exact = empty_exact && c.lhs == 0.0;
    worst = std::max(worst, c.lhs - c.rhs);
  }
  Outcome o;
  o.pass = rep.all_passed() && empty_exact && secs < tol::kAxiomRuntime;
  std::ostringstream os;
  os << rep.checks.size() << " checks on " << fams.size() << " families, " << rep.failures()
     << " failures, worst lhs - rhs " << worst << " (tol " << tol::kAxiomAbs << "), M(empty) exact "
     << (empty_exact ? "yes" : "no") << ", " << secs << " s";
  o.detail = os.str();
  return o;
}

// ------------------------------------------------------------ 5

Outcome fmo_suite() {
  struct Fixture {
    std::string expr;
    std::function<double(double, double)> fn;
    FmoVerdict expected;
  };
  auto r = [](double x, double y) { return std::hypot(x, y); };
  const std::vector<Fixture> fixtures{
      {"1", [](double, double) { return 1.0; }, FmoVerdict::kFmo},
      {"3", [](double, double) { return 3.0; }, FmoVerdict::kFmo},
      {"log(1/sqrt(x1^2+x2^2))", [&](double x, double y) { return std::log(1 / r(x, y)); }, FmoVerdict::kFmo},
      {"1 + x1^2", [](double x, double) { return 1 + x * x; }, FmoVerdict::kFmo},
      {"1/sqrt(x1^2+x2^2)", [&](double x, double y) { return 1 / r(x, y); }, FmoVerdict::kNotFmo},
      {"(x1^2+x2^2)^(-1/4)", [&](double x, double y) { return 1 / std::sqrt(r(x, y)); }, FmoVerdict::kNotFmo},
  };
  const auto field = unit_square(64);
  const auto eps = log_spaced(0.5, 5e-4, 10);
  Outcome o{true, ""};
  int wrong = 0;
  for (const auto& f : fixtures) {
    const auto rep = fmo_indicator(field, planar_q(f.expr), kOrigin2, eps);
    // Oscillation over the smallest disk against a polar quadrature, relative
    // to the oracle plus a rounding floor scaled by the mean.
    const auto small = oracle::disk_stats(f.fn, eps.back());
    const double osc_dev =
        std::abs(rep.oscillation.back() - small.oscillation) / (small.oscillation + 1e-9 * std::abs(small.mean));
    const bool ok = rep.verdict == f.expected && osc_dev <= 0.02;
    if (!ok) ++wrong;
    o.detail += (o.detail.empty() ? "" : "; ") + f.expr + " -> " + to_string(rep.verdict) + " (expected " +
                to_string(f.expected) + ", osc dev " + fmt("%.2g", osc_dev) + ")";
  }
  o.pass = wrong == 0;
  o.detail = std::to_string(wrong) + " misclassified: " + o.detail;
  return o;
}

// ------------------------------------------------------------ 6

Outcome condition3_suite() {
  const auto field = unit_square(64);
  Outcome o{true, ""};
  int wrong = 0;
  auto check = [&](const std::string& label, const std::string& expr, DivergenceVerdict expected) {
    const auto rep = condition3_test(field, planar_q(expr), kOrigin2, 0.5);
    if (rep.verdict != expected) ++wrong;
    o.detail += (o.detail.empty() ? "" : "; ") + label + " -> " + to_string(rep.verdict);
  };
  for (double a : {0.0, -0.5, 0.25, 0.5, 1.0}) {
    const auto expected = oracle::planar_power_divergent(a) ? DivergenceVerdict::kDivergent
                                                            : DivergenceVerdict::kConvergent;
    check("a=" + fmt("%g", a), "(x1^2+x2^2)^(" + fmt("%.17g", -a / 2) + ")", expected);
  }
  check("log(1/|x|)", "log(1/sqrt(x1^2+x2^2))", DivergenceVerdict::kDivergent);
  o.pass = wrong == 0;
  o.detail = std::to_string(wrong) + " misclassified: " + o.detail;
  return o;
}

// ------------------------------------------------------------ 7

Outcome bound_consistency() {
  const auto field = unit_square(64);
  const double eps0 = 0.5;
  const auto q = QField::constant(1.0);
  const auto psi = psi_from_Q(field, q, kOrigin2, eps0).psi;
  const std::vector<double> eps{eps0 / 10, eps0 / 100, eps0 / 1000};
  const auto sched = capacity_bound_schedule(field, q, psi, kOrigin2, eps0, eps);
  Outcome o{sched.decreasing, ""};
  double prev = INFINITY;
  for (const auto& r : sched.rows) {
    const double exact = oracle::planar_unit_bound(r.eps, eps0);
    const double dev = std::abs(r.bound / exact - 1);
    o.pass = o.pass && dev <= tol::kBoundRel && r.bound < prev;
    prev = r.bound;
    o.detail += (o.detail.empty() ? "" : "; ") + fmt("eps0/%g: ", eps0 / r.eps) + fmt("%.6g", r.bound) + " vs " +
                fmt("%.6g", exact) + fmt(" (%.2g%%)", 100 * dev);
  }
  o.detail += std::string(", decreasing ") + (sched.decreasing ? "yes" : "no");
  return o;
}

// ------------------------------------------------------------ 8

Outcome f_equals_i() {
  const auto field = unit_square(64);
  const double eps0 = 0.5;
  const char* weights[] = {"1", "2 + x1", "(x1^2+x2^2)^(-1/4)", "log(1/sqrt(x1^2+x2^2))", "1 + x1^2*x2^2"};
  Outcome o{true, ""};
  double worst = 0.0;
  for (const char* w : weights) {
    const auto q = planar_q(w);
    const auto psi = psi_from_Q(field, q, kOrigin2, eps0).psi;
    for (double k : {10.0, 100.0, 1000.0}) {
      const auto b = capacity_upper_bound(field, q, psi, kOrigin2, eps0 / k, eps0);
      worst = std::max(worst, std::abs(b.F / b.I - 1));
    }
  }
  o.pass = worst <= tol::kFEqualsI;
  o.detail = "5 weights x 3 radii, worst |F/I - 1| = " + fmt("%.3g", worst) + " (<= " + fmt("%g", tol::kFEqualsI) + ")";
  return o;
}

// ------------------------------------------------------------ 9

Outcome zoo() {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 256));
  const RingSpec ring{{0.0, 0.0}, 1.0, oracle::kE};
  const std::vector<EtaFunction> etas{EtaFunction::extremal(1.0, oracle::kE)};
  const double right_unit = oracle::planar_right_extremal(1.0, 1.0, oracle::kE);

  const auto id = ring_q_verify(MappingSpec::identity(2), field, ring, QField::constant(1.0), etas);
  const auto stretch = MappingSpec::radial_stretch(2, 0.5);
  const auto good = ring_q_verify(stretch, field, ring, dilatation_field(stretch, field), etas);
  const auto bad = ring_q_verify(stretch, field, ring, QField::constant(1.0), etas);

  const double image_exact = 2 * M_PI / std::log(std::pow(oracle::kE, 0.5));
  auto rel = [](double a, double b) { return std::abs(a / b - 1); };
  const double d_left_lo = rel(bad.image_lower, image_exact);
  const double d_left_hi = rel(bad.image_upper, image_exact);
  const double d_right = rel(bad.etas[0].right_side, right_unit);
  const double d_id = rel(id.image_lower, right_unit);

  Outcome o;
  o.pass = id.pass && good.pass && !bad.pass && d_left_lo <= tol::kZooClosedForm && d_left_hi <= tol::kZooClosedForm &&
           d_right <= tol::kZooClosedForm && d_id <= tol::kZooClosedForm;
  std::ostringstream os;
  os << "identity/Q=1 " << (id.pass ? "PASS" : "FAIL") << ", stretch/Q=K " << (good.pass ? "PASS" : "FAIL")
     << ", stretch/Q=1 " << (bad.pass ? "PASS" : "FAIL") << " (image [" << bad.image_lower << ", " << bad.image_upper
     << "] vs " << image_exact << ", right " << bad.etas[0].right_side << " vs " << right_unit
     << "), worst closed-form dev " << 100 * std::max({d_left_lo, d_left_hi, d_right, d_id}) << "%";
  o.detail = os.str();
  return o;
}

// ------------------------------------------------------------ 10

Outcome certificates() {
  const auto field = unit_square(64);
  const std::vector<double> sigmas{0.05, 0.1, 0.2, 0.5, 1.0};
  struct Fixture {
    std::string expr;
    double C;
    bool criterion_fails;
  };
  const std::vector<Fixture> fixtures{
      {"1", 1.0, false},
      {"2 + x1", 1.0, false},
      {"1 + x1^2", kCalibratedLoewnerConstant, false},
      {"log(1/sqrt(x1^2+x2^2))", 1.0, false},
      {"(x1^2+x2^2)^(-1/4)", 1.0, true},
      {"1/sqrt(x1^2+x2^2)", 1.0, true},
  };
  Outcome o{true, ""};
  int certified = 0;
  for (const auto& f : fixtures) {
    TargetGeometry geom;
    geom.C_loewner = f.C;
    const auto rep = equicontinuity_certificate(field, planar_q(f.expr), kOrigin2, 0.5, geom, sigmas);
    bool monotone = true;
    for (std::size_t i = 1; i < rep.table.size(); ++i) monotone = monotone && rep.table[i - 1].delta <= rep.table[i].delta;
    const bool is_cert = rep.verdict == CertificateVerdict::kCertified;
    if (is_cert) {
      ++certified;
      o.pass = o.pass && monotone && rep.decreasing;
    }
    if (f.criterion_fails) o.pass = o.pass && !is_cert;
    o.detail += (o.detail.empty() ? "" : "; ") + f.expr + " -> " + to_string(rep.verdict) +
                (is_cert ? (monotone ? " (monotone)" : " (NOT monotone)") : "");
  }
  o.pass = o.pass && certified > 0;
  return o;
}

// ------------------------------------------------------------ 11

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism() {
  struct Job {
    const char* command;
    const char* fixture;
  };
  const Job jobs[] = {
      {"modulus", "modulus_annulus_2d"}, {"modulus", "modulus_annulus_3d"}, {"cap-vs-modulus", "cap_vs_modulus_2d"},
      {"capacity", "capacity_box_2d"},   {"fmo", "fmo_log"},                {"condition3", "condition3_power"},
      {"bound", "bound_q1"},             {"certificate", "certificate_q1"}, {"certificate", "certificate_power"},
      {"zoo-verify", "zoo_stretch"},     {"ahlfors", "ahlfors_2d"},
  };
  const fs::path base = fs::temp_directory_path() / "ringmod_acceptance";
  fs::remove_all(base);
  Outcome o{true, ""};
  int identical = 0;
  for (const auto& j : jobs) {
    const std::string cfg = std::string(RINGMOD_TEST_FIXTURES) + "/" + j.fixture + ".cfg";
    std::string text[2];
    for (int rep = 0; rep < 2; ++rep) {
      cli::RunOptions opts;
      opts.command = j.command;
      opts.out_dir = (base / (std::string(j.fixture) + "_" + std::to_string(rep))).string();
      opts.seed = 7;
      opts.csv = true;
      const auto res = cli::run_file(opts, cfg);
      text[rep] = slurp(res.json_path) + (res.csv_path ? slurp(*res.csv_path) : std::string());
    }
    const bool same = !text[0].empty() && text[0] == text[1];
    identical += same;
    o.pass = o.pass && same;
    if (!same) o.detail += std::string(" differs: ") + j.fixture;
  }
  // The axiom suite has no command of its own; compare two in-process runs.
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 64));
  const auto a = modulus_axiom_suite(field, random_families(field, 2024));
  const auto b = modulus_axiom_suite(field, random_families(field, 2024));
  bool axioms_same = a.checks.size() == b.checks.size();
  for (std::size_t i = 0; axioms_same && i < a.checks.size(); ++i) {
    axioms_same = a.checks[i].lhs == b.checks[i].lhs && a.checks[i].rhs == b.checks[i].rhs;
  }
  o.pass = o.pass && axioms_same;
  fs::remove_all(base);
  o.detail = std::to_string(identical) + "/" + std::to_string(std::size(jobs)) +
             " CLI reports byte-identical (JSON + CSV), axiom suite repeat " + (axioms_same ? "identical" : "differs") +
             o.detail;
  return o;
}

}  // namespace

int main() {
  run_criterion(1, "annulus modulus, plane, 256^2",
                [] { return annulus(2, 256, tol::kWidth2d, tol::kRuntime2d, tol::kMinCurves2d); });
  run_criterion(2, "annulus modulus, space, 64^3", [] { return annulus(3, 64, tol::kWidth3d, tol::kRuntime3d, 0); });
  run_criterion(3, "capacity equals modulus, round rings", cap_vs_modulus);
  run_criterion(4, "modulus axiom suite", axioms);
  run_criterion(5, "FMO classifier, 6 fixtures", fmo_suite);
  run_criterion(6, "divergence classifier, power family and log", condition3_suite);
  run_criterion(7, "capacity bound for Q = 1 against 2 pi / log(eps0/eps)", bound_consistency);
  run_criterion(8, "F = I for the self gauge, 5 weights", f_equals_i);
  run_criterion(9, "ring Q-inequality zoo", zoo);
  run_criterion(10, "certificate monotonicity and failing weights", certificates);
  run_criterion(11, "determinism of CLI reports", determinism);
  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
