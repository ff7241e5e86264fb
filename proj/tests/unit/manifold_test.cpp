#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ringmod/error.hpp"
#include "ringmod/manifold.hpp"

using namespace ringmod;

TEST(ChartGrid, IndexRoundTrip) {
  const ChartGrid g({-1.0, 0.0, 2.0}, {0.5, 0.25, 1.0}, {4, 3, 2});
  EXPECT_EQ(g.node_count(), 5u * 4u * 3u);
  EXPECT_EQ(g.cell_count(), 4u * 3u * 2u);
  EXPECT_DOUBLE_EQ(g.upper(0), 1.0);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.125);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    int idx[3];
    g.node_multi_index(n, idx);
    EXPECT_EQ(g.node_index(idx), n);
  }
  const Point p{0.3, 0.6, 3.9};
  const auto c = g.cell_of(p);
  ASSERT_TRUE(c.has_value());
  const Point center = g.cell_center(*c);
  EXPECT_DOUBLE_EQ(center[0], 0.25);
  EXPECT_DOUBLE_EQ(center[1], 0.625);
  EXPECT_DOUBLE_EQ(center[2], 3.5);
  EXPECT_FALSE(g.cell_of(Point{5.0, 0.0, 2.0}).has_value());
  EXPECT_TRUE(g.is_boundary_node(0));
}

TEST(ChartGrid, Refinement) {
  const auto g = ChartGrid::cube(2, -1.0, 1.0, 8);
  const auto r = g.refined();
  EXPECT_EQ(r.extents()[0], 16);
  EXPECT_DOUBLE_EQ(r.spacing(0), g.spacing(0) / 2);
  EXPECT_TRUE(g.contains_ball(Point{0.0, 0.0}, 1.0));
  EXPECT_FALSE(g.contains_ball(Point{0.5, 0.0}, 0.6));
}

TEST(MetricField, RejectsNonSpd) {
  const auto g = ChartGrid::cube(2, -1.0, 1.0, 4);
  EXPECT_THROW(MetricField::matrix(g,
                                   [](std::span<const double>, Eigen::MatrixXd& m) {
                                     m << 1.0, 2.0, 2.0, 1.0;
                                   }),
               MetricIntegrityError);
  EXPECT_THROW(MetricField::matrix(g,
                                   [](std::span<const double>, Eigen::MatrixXd& m) {
                                     m << 1.0, 0.1, 0.0, 1.0;
                                   }),
               MetricIntegrityError);
  EXPECT_THROW(MetricField::conformal(g, [](std::span<const double> p) { return p[0]; }), MetricIntegrityError);
}

TEST(MetricField, CheckedEvaluation) {
  const auto f = MetricField::conformal(ChartGrid::cube(2, -1.0, 1.0, 4), Expression::parse_chart("1 + x1^2", 2));
  const auto m = f.at(Point{0.5, 0.0});
  EXPECT_DOUBLE_EQ(m(0, 0), 1.25);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.0);
  EXPECT_THROW(f.at(Point{2.0, 0.0}), DomainError);
  EXPECT_NEAR(f.sqrt_det(Point{0.5, 0.0}), 1.25, 1e-12);
}

TEST(CurveLength, ConformalScaling) {
  const auto grid = ChartGrid::cube(2, -2.0, 2.0, 16);
  const auto eu = MetricField::euclidean(grid);
  const auto c4 = MetricField::conformal(grid, [](std::span<const double>) { return 4.0; });
  CurvePolyline seg{{{-1.0, -1.0}, {1.0, 1.0}}};
  EXPECT_NEAR(curve_length(eu, seg).length, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(curve_length(c4, seg).length, 4.0 * std::sqrt(2.0), 1e-12);

  CurvePolyline square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, true};
  EXPECT_EQ(square.segment_count(), 4u);
  EXPECT_NEAR(curve_length(eu, square).length, 4.0, 1e-12);
}

TEST(CurveLength, DegenerateAndOutside) {
  const auto eu = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 4));
  const auto r = curve_length(eu, CurvePolyline{{{0.0, 0.0}}});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.length, 0.0);
  EXPECT_TRUE(curve_length(eu, CurvePolyline{{{0.0, 0.0}, {0.0, 0.0}}}).degenerate);
  EXPECT_THROW(curve_length(eu, CurvePolyline{{{0.0, 0.0}, {3.0, 0.0}}}), DomainError);
}

TEST(CurveLength, ArcApproximatesCircle) {
  // Polyline inscribed in the unit circle with m sides: 2 m sin(pi/m).
  const auto eu = MetricField::euclidean(ChartGrid::cube(2, -2.0, 2.0, 8));
  const int m = 400;
  CurvePolyline c;
  c.closed = true;
  for (int k = 0; k < m; ++k) c.vertices.push_back({std::cos(2 * M_PI * k / m), std::sin(2 * M_PI * k / m)});
  EXPECT_NEAR(curve_length(eu, c).length, 2.0 * m * std::sin(M_PI / m), 1e-12);
}

TEST(VolumeMeasure, EuclideanAndConformal) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 10);
  EXPECT_NEAR(volume_measure(MetricField::euclidean(grid), CellRegion::all(grid)), 4.0, 1e-12);
  const auto c = MetricField::conformal(grid, [](std::span<const double>) { return 9.0; });
  EXPECT_NEAR(volume_measure(c, CellRegion::all(grid)), 36.0, 1e-10);
  const auto half = CellRegion::from_predicate(grid, [](std::span<const double> p) { return p[0] < 0.0; });
  EXPECT_EQ(half.size(), 50u);
  EXPECT_NEAR(volume_measure(MetricField::euclidean(grid), half), 2.0, 1e-12);
}

TEST(SurfaceMeasure, EuclideanSpheres) {
  for (int n : {2, 3}) {
    const auto field = MetricField::euclidean(ChartGrid::cube(n, -2.0, 2.0, 8));
    for (double r : {0.3, 1.0, 1.7}) {
      const SphereSpec s{Point(static_cast<std::size_t>(n), 0.0), r};
      const double exact = oracle::sphere_area(n) * std::pow(r, n - 1);
      EXPECT_NEAR(surface_measure(field, s) / exact, 1.0, 0.01) << "n=" << n << " r=" << r;
    }
  }
}

TEST(SurfaceMeasure, WeightedCircle) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -2.0, 2.0, 8));
  const auto q = QField::expression(Expression::parse_chart("1 + x1^2", 2));
  const SphereSpec s{{0.2, -0.1}, 0.8};
  const double exact = oracle::circle_integral([](double x, double) { return 1 + x * x; }, 0.2, -0.1, 0.8);
  EXPECT_NEAR(surface_measure(field, s, q) / exact, 1.0, 0.005);
}

TEST(SurfaceMeasure, ConformalCircle) {
  // g = lambda^2 I scales the length element by lambda.
  const auto field = MetricField::conformal(ChartGrid::cube(2, -2.0, 2.0, 8), [](std::span<const double>) { return 4.0; });
  EXPECT_NEAR(surface_measure(field, SphereSpec{{0.0, 0.0}, 1.0}) / (4.0 * M_PI), 1.0, 0.005);
}

TEST(SurfaceMeasure, SphereMustFit) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 8));
  EXPECT_THROW(surface_measure(field, SphereSpec{{0.5, 0.0}, 0.9}), DomainError);
}

TEST(RadialVolumeIntegral, AnnulusArea) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 8));
  const Point c{0.0, 0.0};
  const double v = radial_volume_integral(field, c, 1.0, 2.0, [](double) { return 1.0; });
  EXPECT_NEAR(v, 3.0 * M_PI, 1e-6);
  const double w = radial_volume_integral(field, c, 0.0, 1.0, [](double t) { return t; });
  EXPECT_NEAR(w, 2.0 * M_PI / 3.0, 1e-6);
}

TEST(GeodesicDistance, EuclideanBounds) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 32));
  const Point a{-0.5, -0.25}, b{0.5, 0.5};
  const double exact = std::hypot(1.0, 0.75);
  const double d = geodesic_distance(field, a, b);
  EXPECT_GE(d, exact * (1 - 1e-12));
  EXPECT_LE(d, exact * kStencilAnisotropy * (1 + 1e-12));
  const auto axis = geodesic_distance(field, Point{-0.5, 0.0}, Point{0.5, 0.0});
  EXPECT_NEAR(axis, 1.0, 1e-12);
}

TEST(GeodesicDistance, BlockedWall) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 16);
  const auto field = MetricField::euclidean(grid);
  std::vector<char> blocked(grid.node_count(), 0);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    if (std::abs(grid.node_position(n)[0]) < 1e-12) blocked[n] = 1;
  }
  EXPECT_TRUE(std::isinf(geodesic_distance(field, Point{-0.5, 0.0}, Point{0.5, 0.0}, &blocked)));
}

TEST(GeodesicDistance, RefinementConverges) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 16));
  const auto r = geodesic_distance_refined(field, Point{-0.5, 0.0}, Point{0.5, 0.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}

TEST(Ahlfors, EuclideanExponent) {
  for (int n : {2, 3}) {
    const auto field = MetricField::euclidean(ChartGrid::cube(n, -1.0, 1.0, n == 2 ? 64 : 24));
    const std::vector<double> radii{0.1, 0.2, 0.4, 0.8};
    const auto rep = ahlfors_probe(field, Point(static_cast<std::size_t>(n), 0.0), radii);
    EXPECT_NEAR(rep.q_fit / n, 1.0, 0.05);
    EXPECT_TRUE(rep.consistent_with_dim);
    EXPECT_NEAR(rep.prefactor, oracle::sphere_area(n) / n, 0.05 * oracle::sphere_area(n) / n);
  }
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 16));
  const std::vector<double> two{0.1, 0.2};
  EXPECT_THROW(ahlfors_probe(field, Point{0.0, 0.0}, two), InsufficientDataError);
}

TEST(Ahlfors, GeodesicBallVolume) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 128));
  const double v = ball_volume(field, Point{0.0, 0.0}, 0.5, DistanceMode::kGeodesic);
  // The stencil overestimates distances, so the grid ball lies inside the true one.
  EXPECT_LE(v, M_PI * 0.25 * 1.02);
  EXPECT_GE(v, M_PI * 0.25 / (kStencilAnisotropy * kStencilAnisotropy));
}
