#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ringmod/error.hpp"
#include "ringmod/q_analysis.hpp"

using namespace ringmod;

namespace {

MetricField plane() { return MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 64)); }

QField q_expr(const std::string& text, bool singular = true) {
  std::vector<Point> s;
  if (singular) s.push_back({0.0, 0.0});
  return QField::expression(Expression::parse_chart(text, 2), s);
}

const Point kOrigin{0.0, 0.0};

}  // namespace

TEST(Psi, FmoGauge) {
  const auto psi = psi_fmo();
  EXPECT_NEAR(psi(0.1), 1.0 / (0.1 * std::log(10.0)), 1e-12);
  EXPECT_THROW(psi(0.0), DomainError);
  EXPECT_THROW(psi(0.5), DomainError);
  EXPECT_TRUE(psi.closed_form());
  EXPECT_NEAR(I_integral(psi, 1e-6, 0.1), oracle::psi_fmo_integral(1e-6, 0.1), 1e-12);
}

TEST(Psi, PowerGauge) {
  const auto psi = PsiFunction::power(2.0, -1.0);
  EXPECT_DOUBLE_EQ(psi(0.5), 4.0);
  EXPECT_NEAR(I_integral(psi, 0.01, 1.0), 2.0 * std::log(100.0), 1e-12);
  const auto sq = PsiFunction::power(1.0, 2.0);
  EXPECT_NEAR(I_integral(sq, 0.0 + 1e-300, 1.0), 1.0 / 3.0, 1e-12);
}

TEST(Psi, NumericIntegralMatchesClosedForm) {
  const PsiFunction numeric([](double t) { return 1.0 / (t * std::log(1.0 / t)); }, "fmo numeric", 1.0 / M_E);
  EXPECT_FALSE(numeric.closed_form());
  EXPECT_NEAR(I_integral(numeric, 1e-8, 0.2) / oracle::psi_fmo_integral(1e-8, 0.2), 1.0, 1e-6);
}

TEST(Psi, HypothesisViolations) {
  EXPECT_THROW(I_integral(PsiFunction::zero(), 0.1, 0.2), HypothesisError);
  try {
    I_integral(PsiFunction::zero(), 0.1, 0.2);
  } catch (const HypothesisError& e) {
    EXPECT_FALSE(e.hypothesis().empty());
  }
}

TEST(FIntegral, ClosedForms) {
  const auto field = plane();
  // Q = 1, psi = 1/t: F = int 2 pi t / t^2 = 2 pi log(eps0/eps).
  const double f1 = F_integral(field, QField::constant(1.0), PsiFunction::power(1.0, -1.0), kOrigin, 1e-4, 0.5);
  EXPECT_NEAR(f1 / (2 * M_PI * std::log(0.5 / 1e-4)), 1.0, 1e-3);
  // Q = |x|^{-1/2}, psi = 1: F = 2 pi (2/3)(eps0^{3/2} - eps^{3/2}).
  const double f2 = F_integral(field, q_expr("(x1^2+x2^2)^(-1/4)"), PsiFunction::power(1.0, 0.0), kOrigin, 1e-3, 0.5);
  const double exact = 2 * M_PI * (2.0 / 3.0) * (std::pow(0.5, 1.5) - std::pow(1e-3, 1.5));
  EXPECT_NEAR(f2 / exact, 1.0, 1e-3);
}

TEST(FIntegral, RejectsBadRadii) {
  const auto field = plane();
  EXPECT_THROW(F_integral(field, QField::constant(1.0), PsiFunction::power(1, -1), kOrigin, 0.5, 0.1), DomainError);
  EXPECT_THROW(F_integral(field, QField::constant(1.0), PsiFunction::power(1, -1), kOrigin, 0.1, 2.0), DomainError);
}

TEST(PsiFromQ, UnitWeightTable) {
  const auto field = plane();
  const auto p = psi_from_Q(field, QField::constant(1.0), kOrigin, 0.5);
  ASSERT_GE(p.table.t.size(), 4u);
  for (std::size_t i = 0; i < p.table.t.size(); ++i) {
    EXPECT_NEAR(p.table.a[i] / (2 * M_PI * p.table.t[i]), 1.0, 5e-3);
  }
  EXPECT_NEAR(p.psi(0.01) * 2 * M_PI * 0.01, 1.0, 5e-3);
  EXPECT_EQ(p.psi(0.7), 0.0);
  EXPECT_FALSE(p.infinite_somewhere);
}

TEST(CapacityBound, UnitWeightMatchesRingCapacity) {
  const auto field = plane();
  const double eps0 = 0.5;
  const auto p = psi_from_Q(field, QField::constant(1.0), kOrigin, eps0);
  for (double k : {10.0, 100.0, 1000.0}) {
    const auto b = capacity_upper_bound(field, QField::constant(1.0), p.psi, kOrigin, eps0 / k, eps0);
    EXPECT_NEAR(b.bound / oracle::planar_unit_bound(eps0 / k, eps0), 1.0, 0.05) << k;
    EXPECT_NEAR(b.F / b.I, 1.0, 0.01);
  }
}

TEST(CapacityBound, ScheduleDecreasing) {
  const auto field = plane();
  const auto psi = psi_from_Q(field, QField::constant(1.0), kOrigin, 0.5).psi;
  const auto eps = log_spaced(0.05, 5e-6, 6);
  const auto s = capacity_bound_schedule(field, QField::constant(1.0), psi, kOrigin, 0.5, eps);
  ASSERT_EQ(s.rows.size(), 6u);
  EXPECT_TRUE(s.decreasing);
  EXPECT_LT(s.trend_slope, 0.0);
  for (const auto& r : s.rows) EXPECT_NEAR(r.bound / oracle::planar_unit_bound(r.eps, 0.5), 1.0, 0.05);
}

TEST(LogSpaced, Endpoints) {
  const auto v = log_spaced(1.0, 1e-3, 4);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v.front(), 1.0);
  EXPECT_NEAR(v[1], 0.1, 1e-15);
  EXPECT_NEAR(v.back(), 1e-3, 1e-15);
}

TEST(DefaultDelta, HalfDistanceToBoundary) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 8);
  EXPECT_DOUBLE_EQ(default_delta(grid, Point{0.0, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(default_delta(grid, Point{0.6, 0.0}), 0.2);
}

TEST(Fmo, OscillationMatchesPolarQuadrature) {
  const auto field = plane();
  const std::vector<std::pair<std::string, std::function<double(double, double)>>> cases{
      {"1 + x1^2", [](double x, double) { return 1 + x * x; }},
      {"log(1/sqrt(x1^2+x2^2))", [](double x, double y) { return std::log(1 / std::hypot(x, y)); }},
  };
  const auto eps = log_spaced(0.5, 5e-4, 7);
  for (const auto& [text, fn] : cases) {
    const auto rep = fmo_indicator(field, q_expr(text), kOrigin, eps);
    for (std::size_t i = 0; i < eps.size(); i += 3) {
      const auto ref = oracle::disk_stats(fn, eps[i]);
      EXPECT_NEAR(rep.mean[i] / ref.mean, 1.0, 0.01) << text << " eps=" << eps[i];
      EXPECT_NEAR(rep.oscillation[i] / ref.oscillation, 1.0, 0.02) << text << " eps=" << eps[i];
    }
  }
}

TEST(Fmo, Verdicts) {
  const auto field = plane();
  const auto eps = log_spaced(0.5, 5e-4, 10);
  EXPECT_EQ(fmo_indicator(field, QField::constant(2.0), kOrigin, eps).verdict, FmoVerdict::kFmo);
  EXPECT_EQ(fmo_indicator(field, q_expr("log(1/sqrt(x1^2+x2^2))"), kOrigin, eps).verdict, FmoVerdict::kFmo);
  EXPECT_EQ(fmo_indicator(field, q_expr("1/sqrt(x1^2+x2^2)"), kOrigin, eps).verdict, FmoVerdict::kNotFmo);
}

TEST(Fmo, InsufficientData) {
  const auto field = plane();
  const std::vector<double> three{0.1, 0.01, 0.001};
  EXPECT_THROW(fmo_indicator(field, QField::constant(1.0), kOrigin, three), InsufficientDataError);
  const std::vector<double> narrow{0.1, 0.08, 0.06, 0.04};
  EXPECT_THROW(fmo_indicator(field, QField::constant(1.0), kOrigin, narrow), InsufficientDataError);
}

TEST(Condition3, PowerFamily) {
  const auto field = plane();
  for (double a : {0.0, -0.5, 0.25, 0.5, 1.0}) {
    const std::string text = "(x1^2+x2^2)^(" + std::to_string(-a / 2) + ")";
    const auto rep = condition3_test(field, q_expr(text), kOrigin, 0.5);
    const auto expected =
        oracle::planar_power_divergent(a) ? DivergenceVerdict::kDivergent : DivergenceVerdict::kConvergent;
    EXPECT_EQ(rep.verdict, expected) << "a=" << a << " slope=" << rep.slope;
    // a(t) = 2 pi t^{1-a}: the integrand is t^{a-1} / (2 pi).
    for (std::size_t i = 0; i < rep.t.size(); i += 8) {
      EXPECT_NEAR(rep.integrand[i] * 2 * M_PI * std::pow(rep.t[i], 1 - a), 1.0, 0.01);
    }
    for (std::size_t i = 1; i < rep.partial.size(); ++i) EXPECT_GE(rep.partial[i], rep.partial[i - 1]);
  }
}

TEST(Condition3, LogarithmicWeightDiverges) {
  const auto rep = condition3_test(plane(), q_expr("log(1/sqrt(x1^2+x2^2))"), kOrigin, 0.5);
  EXPECT_EQ(rep.verdict, DivergenceVerdict::kDivergent);
}
