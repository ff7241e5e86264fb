#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ringmod/equicontinuity.hpp"
#include "ringmod/error.hpp"

using namespace ringmod;

namespace {

Eigen::MatrixXd central_difference(const MappingSpec& f, const Point& x) {
  const int n = f.dim();
  Eigen::MatrixXd j(n, n);
  for (int c = 0; c < n; ++c) {
    Point a = x, b = x;
    const double h = 1e-6;
    a[c] -= h;
    b[c] += h;
    const auto fa = f(a), fb = f(b);
    for (int r = 0; r < n; ++r) j(r, c) = (fb[r] - fa[r]) / (2 * h);
  }
  return j;
}

}  // namespace

TEST(Geometry, ScaleAndValidation) {
  TargetGeometry g;
  g.R = 2.0;
  g.C_loewner = 3.0;
  EXPECT_DOUBLE_EQ(g.exponent(), 2.0);
  EXPECT_DOUBLE_EQ(g.scale(), 6.0);
  g.q_tilde = 2.5;
  EXPECT_NEAR(g.scale(), 3.0 * std::pow(2.0, 0.5), 1e-12);
  TargetGeometry bad;
  bad.diam_K = 3.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = TargetGeometry{};
  bad.C_loewner = 0.5;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Loewner, LowerBound) {
  TargetGeometry g;
  g.C_loewner = 4.0;
  EXPECT_DOUBLE_EQ(loewner_lower_bound(0.5, 0.8, 1.0, g), 0.125);
  EXPECT_THROW(loewner_lower_bound(0.0, 0.8, 1.0, g), DegenerateContinuumError);
}

TEST(DiameterBound, MonotoneAndZeroAtZero) {
  TargetGeometry g;
  g.C_loewner = 2.0;
  g.diam_K = 1.0;
  EXPECT_EQ(diameter_bound(0.0, g).value, 0.0);
  EXPECT_TRUE(diameter_bound(0.0, g).min_attained);
  double prev = 0.0;
  for (double c = 0.01; c < 2.0; c *= 1.3) {
    const auto d = diameter_bound(c, g);
    EXPECT_GE(d.value, prev);
    EXPECT_EQ(d.min_attained, d.value < 1.0);
    prev = d.value;
  }
}

TEST(Mapping, AnalyticJacobians) {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.5, -0.3, 1.0;
  const std::vector<MappingSpec> maps{
      MappingSpec::identity(2),
      MappingSpec::radial_stretch(2, 0.5),
      MappingSpec::radial_stretch(3, 1.7, {0.1, 0.0, -0.2}),
      MappingSpec::winding(3),
      MappingSpec::linear(a),
  };
  for (const auto& f : maps) {
    ASSERT_TRUE(f.analytic_jacobian());
    const Point x = f.dim() == 2 ? Point{0.4, -0.7} : Point{0.4, -0.7, 0.3};
    const auto j = f.jacobian(x);
    EXPECT_LT((j - central_difference(f, x)).norm(), 1e-6) << f.description();
  }
}

TEST(Mapping, UserExpressions) {
  const auto f = MappingSpec::user({Expression::parse_chart("x1^2 - x2^2", 2), Expression::parse_chart("2*x1*x2", 2)});
  EXPECT_FALSE(f.analytic_jacobian());
  const auto w = MappingSpec::winding(2);
  const Point x{0.3, 0.8};
  EXPECT_NEAR(f(x)[0], w(x)[0], 1e-14);
  EXPECT_NEAR(f(x)[1], w(x)[1], 1e-14);
  EXPECT_LT((f.jacobian(x) - w.jacobian(x)).norm(), 1e-6);
}

TEST(Dilatation, ClosedForms) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -2.0, 2.0, 8));
  const Point x{0.6, -0.3};
  // Stretch by alpha: singular values alpha r^(alpha-1) and r^(alpha-1).
  EXPECT_NEAR(outer_dilatation(MappingSpec::radial_stretch(2, 0.5), field, x), 2.0, 1e-10);
  EXPECT_NEAR(outer_dilatation(MappingSpec::radial_stretch(2, 3.0), field, x), 3.0, 1e-10);
  EXPECT_NEAR(outer_dilatation(MappingSpec::winding(4), field, x), 1.0, 1e-10);
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.0, 0.0, 1.0;
  EXPECT_NEAR(outer_dilatation(MappingSpec::linear(a), field, x), 2.0, 1e-12);

  const auto field3 = MetricField::euclidean(ChartGrid::cube(3, -2.0, 2.0, 4));
  // In space the two tangential singular values dominate: K_O = 1 / alpha.
  EXPECT_NEAR(outer_dilatation(MappingSpec::radial_stretch(3, 0.5), field3, Point{0.3, 0.2, -0.5}), 2.0, 1e-10);
}

TEST(Dilatation, FieldMarksSingularities) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 8));
  const auto q = dilatation_field(MappingSpec::radial_stretch(2, 0.5), field);
  EXPECT_NEAR(q(Point{0.3, 0.4}), 2.0, 1e-10);
  ASSERT_FALSE(q.singular_points().empty());
  EXPECT_NEAR(q.singular_points()[0][0], 0.0, 1e-12);
  const auto qi = dilatation_field(MappingSpec::identity(2), field);
  EXPECT_NEAR(qi(Point{0.1, 0.2}), 1.0, 1e-12);
  EXPECT_TRUE(qi.singular_points().empty());
}

TEST(Eta, Normalization) {
  const double r1 = 1.0, r2 = oracle::kE;
  EXPECT_NEAR(EtaFunction::extremal(r1, r2).normalization(r1, r2), 1.0, 1e-10);
  EXPECT_NEAR(EtaFunction::constant(r1, r2).normalization(r1, r2), 1.0, 1e-12);
}

TEST(RingQ, IdentityAndStretch) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 128));
  const RingSpec ring{{0.0, 0.0}, 1.0, oracle::kE};
  const std::vector<EtaFunction> etas{EtaFunction::extremal(1.0, oracle::kE), EtaFunction::constant(1.0, oracle::kE)};

  const auto id = ring_q_verify(MappingSpec::identity(2), field, ring, QField::constant(1.0), etas);
  EXPECT_TRUE(id.pass);
  EXPECT_NEAR(id.etas[0].right_side / oracle::planar_right_extremal(1.0, 1.0, oracle::kE), 1.0, 1e-3);
  EXPECT_NEAR(id.etas[1].right_side / oracle::planar_right_constant(1.0, 1.0, oracle::kE), 1.0, 1e-3);

  const auto stretch = MappingSpec::radial_stretch(2, 0.5);
  const double image_exact = 2 * M_PI / (0.5 * std::log(oracle::kE));
  const auto good = ring_q_verify(stretch, field, ring, dilatation_field(stretch, field), etas);
  EXPECT_TRUE(good.pass);
  EXPECT_TRUE(good.image_is_ring);
  EXPECT_NEAR(good.image_upper / image_exact, 1.0, 0.05);
  EXPECT_LE(good.image_lower, good.image_upper * (1 + 1e-9));

  const auto bad = ring_q_verify(stretch, field, ring, QField::constant(1.0), etas);
  EXPECT_FALSE(bad.pass);
  const auto half = ring_q_verify(stretch, field, ring, dilatation_field(stretch, field).scaled(0.5), etas);
  EXPECT_FALSE(half.pass);
}

TEST(RingQ, RejectsUnnormalizedEta) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 64));
  const RingSpec ring{{0.0, 0.0}, 1.0, 2.0};
  const std::vector<EtaFunction> etas{EtaFunction{[](double) { return 0.5; }, "half"}};
  const auto rep = ring_q_verify(MappingSpec::identity(2), field, ring, QField::constant(1.0), etas);
  ASSERT_EQ(rep.etas.size(), 1u);
  EXPECT_FALSE(rep.etas[0].accepted);
  EXPECT_FALSE(rep.pass);
}

TEST(Certificate, UnitWeightChain) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 64));
  TargetGeometry geom;
  geom.C_loewner = 1.0;
  const std::vector<double> sigmas{0.1, 0.2, 0.5, 1.0};
  const auto rep = equicontinuity_certificate(field, QField::constant(1.0), Point{0.0, 0.0}, 0.5, geom, sigmas);
  EXPECT_EQ(rep.verdict, CertificateVerdict::kCertified);
  EXPECT_TRUE(rep.criterion_positive);
  EXPECT_TRUE(rep.decreasing);
  ASSERT_EQ(rep.table.size(), sigmas.size());
  for (const auto& row : rep.table) {
    ASSERT_TRUE(row.reached);
    const double expected = oracle::planar_unit_delta(row.sigma, rep.eps0, 1.0, 1.0);
    EXPECT_NEAR(std::log(row.delta / expected), 0.0, 0.05) << row.sigma;
  }
  for (std::size_t i = 1; i < rep.table.size(); ++i) EXPECT_LE(rep.table[i - 1].delta, rep.table[i].delta);
}

TEST(Certificate, FailingWeightNotCertified) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 64));
  const auto q = QField::expression(Expression::parse_chart("(x1^2+x2^2)^(-1/4)", 2), {{0.0, 0.0}});
  const std::vector<double> sigmas{0.1, 0.5};
  const auto rep = equicontinuity_certificate(field, q, Point{0.0, 0.0}, 0.5, TargetGeometry{}, sigmas);
  EXPECT_EQ(rep.verdict, CertificateVerdict::kNotCertified);
  EXPECT_TRUE(rep.criterion_negative);
}

TEST(Certificate, ExplicitFmoBranch) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 64));
  CertificateOptions opts;
  opts.branch = CriterionBranch::kFmo;
  const std::vector<double> sigmas{0.5, 1.0};
  const auto rep = equicontinuity_certificate(field, QField::constant(1.0), Point{0.0, 0.0}, 0.5, TargetGeometry{},
                                              sigmas, opts);
  ASSERT_TRUE(rep.fmo.has_value());
  EXPECT_EQ(rep.fmo->verdict, FmoVerdict::kFmo);
  EXPECT_LE(rep.eps0, 1.0 / M_E);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) EXPECT_LE(rep.rows[i].bound, rep.rows[i - 1].bound * (1 + 1e-9));
}

TEST(ConnectingFamily, CurvesJoinContinuaInsideBall) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.1, 1.1, 32));
  const LoewnerFixture fx{"t", {-0.5, -0.3}, {-0.5, 0.3}, {0.5, -0.3}, {0.5, 0.3}, 1.0};
  const auto fam = connecting_family(field, fx, 8, 1);
  EXPECT_FALSE(fam.is_empty());
  for (const auto& c : fam.curves) {
    EXPECT_NEAR(c.vertices.front()[0], -0.5, 1e-12);
    EXPECT_NEAR(c.vertices.back()[0], 0.5, 1e-12);
    for (const auto& v : c.vertices) EXPECT_LE(std::hypot(v[0], v[1]), 1.0 + 1e-12);
  }
}

TEST(ConnectingFamily, CalibratedConstantCoversPlanarSuite) {
  const auto fixtures = default_loewner_fixtures(2);
  EXPECT_EQ(fixtures.size(), 6u);
  const auto samples = loewner_calibration_suite(fixtures, 2, 128);
  TargetGeometry geom;
  for (const auto& s : samples) {
    EXPECT_LE(s.ratio, kCalibratedLoewnerConstant) << s.name;
    EXPECT_LE(loewner_lower_bound(s.diam_E, s.diam_F, s.R, geom), s.modulus) << s.name;
  }
}
