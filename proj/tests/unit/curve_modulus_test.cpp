#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "oracles.hpp"
#include "ringmod/curve_modulus.hpp"
#include "ringmod/error.hpp"

using namespace ringmod;

namespace {

/// Per-cell chart lengths of a polyline under segment-midpoint lookup.
std::map<std::size_t, double> cell_lengths(const ChartGrid& g, const CurvePolyline& c) {
  std::map<std::size_t, double> out;
  for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
    const auto& a = c.vertices[i];
    const auto& b = c.vertices[i + 1];
    Point mid(a.size());
    double len = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      mid[k] = 0.5 * (a[k] + b[k]);
      len += (b[k] - a[k]) * (b[k] - a[k]);
    }
    out[*g.cell_of(mid)] += std::sqrt(len);
  }
  return out;
}

CurvePolyline segment(Point a, Point b, int pieces) {
  CurvePolyline c;
  for (int k = 0; k <= pieces; ++k) {
    const double s = static_cast<double>(k) / pieces;
    Point p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] + s * (b[i] - a[i]);
    c.vertices.push_back(p);
  }
  return c;
}

}  // namespace

TEST(ModulusLower, EmptyFamilyIsZero) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 8));
  const auto r = modulus_lower(CurveFamily::empty(), field);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.primal, 0.0);
}

TEST(ModulusLower, SingleCurveMatchesKkt) {
  for (int n : {2, 3}) {
    const auto grid = ChartGrid::cube(n, -1.0, 1.0, 10);
    const auto field = MetricField::euclidean(grid);
    Point a(static_cast<std::size_t>(n), 0.03), b(static_cast<std::size_t>(n), 0.03);
    a[0] = -0.83;
    b[0] = 0.61;
    b[1] = 0.47;
    CurveFamily fam;
    fam.curves.push_back(segment(a, b, 97));
    std::vector<double> lengths, areas;
    for (const auto& [cell, l] : cell_lengths(grid, fam.curves[0])) {
      lengths.push_back(l);
      areas.push_back(grid.cell_volume());
    }
    const double expected = oracle::single_curve_program(lengths, areas, n);
    const auto r = modulus_lower(fam, field, SolverOptions{20000, 1e-9});
    EXPECT_NEAR(r.value / expected, 1.0, 1e-6) << "n=" << n;
    EXPECT_LE(r.value, r.primal * (1 + 1e-12));
    EXPECT_TRUE(is_admissible(field, r.density, fam).admissible);
  }
}

TEST(ModulusLower, ParallelDisjointCurvesAdd) {
  // Curves through disjoint cells: the program splits into independent parts.
  const auto grid = ChartGrid::cube(2, 0.0, 1.0, 10);
  const auto field = MetricField::euclidean(grid);
  CurveFamily one, two;
  one.curves.push_back(segment({0.0, 0.15}, {1.0, 0.15}, 40));
  two = one;
  two.curves.push_back(segment({0.0, 0.55}, {1.0, 0.55}, 40));
  const double m1 = modulus_lower(one, field, SolverOptions{20000, 1e-9}).value;
  const double m2 = modulus_lower(two, field, SolverOptions{20000, 1e-9}).value;
  // Crossing 10 cells of side 0.1 gives (10 * 0.01/0.01)^{-1} = 0.1.
  EXPECT_NEAR(m1, 0.1, 1e-6);
  EXPECT_NEAR(m2, 0.2, 1e-6);
}

TEST(ModulusLower, Deterministic) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 48));
  const RingSpec ring{{0.0, 0.0}, 1.0, oracle::kE};
  const auto fam = sample_ring_curves(field, ring, 64, 2, 7);
  const auto a = modulus_lower(fam, field);
  const auto b = modulus_lower(fam, field);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.density.values, b.density.values);
}

TEST(RingSampling, CurvesJoinTheSpheres) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 64));
  const RingSpec ring{{0.25, -0.1}, 0.8, 2.1};
  for (int level : {0, 1, 2}) {
    const auto fam = sample_ring_curves(field, ring, 40, level, 3);
    ASSERT_EQ(fam.size(), 40u);
    for (const auto& c : fam.curves) {
      auto radius = [&](const Point& p) { return std::hypot(p[0] - 0.25, p[1] + 0.1); };
      EXPECT_NEAR(radius(c.vertices.front()), 0.8, 1e-9);
      EXPECT_NEAR(radius(c.vertices.back()), 2.1, 1e-9);
      for (const auto& v : c.vertices) {
        EXPECT_GE(radius(v), 0.8 - 1e-9);
        EXPECT_LE(radius(v), 2.1 + 1e-9);
      }
    }
    const auto again = sample_ring_curves(field, ring, 40, level, 3);
    EXPECT_EQ(again.curves[5].vertices, fam.curves[5].vertices);
  }
}

TEST(RingSpec, Validation) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 8);
  EXPECT_THROW((RingSpec{{0.0, 0.0}, 0.5, 0.4}.validate(grid)), DomainError);
  EXPECT_THROW((RingSpec{{0.0, 0.0}, 0.0, 0.4}.validate(grid)), DomainError);
  EXPECT_THROW((RingSpec{{0.5, 0.0}, 0.2, 0.6}.validate(grid)), DomainError);
  EXPECT_NO_THROW((RingSpec{{0.0, 0.0}, 0.2, 0.9}.validate(grid)));
}

TEST(RadialFlux, EuclideanAnnulusIsExact) {
  for (int n : {2, 3}) {
    const auto field = MetricField::euclidean(ChartGrid::cube(n, -3.0, 3.0, 8));
    const RingSpec ring{Point(static_cast<std::size_t>(n), 0.0), 1.0, 2.5};
    EXPECT_NEAR(radial_flux_lower(ring, field) / oracle::annulus_modulus(n, 1.0, 2.5), 1.0, 1e-6);
  }
}

TEST(RadialFlux, PlanarConformalInvariance) {
  // In the plane the modulus does not change under a conformal factor.
  const auto grid = ChartGrid::cube(2, -3.0, 3.0, 64);
  const auto field = MetricField::conformal(grid, Expression::parse_chart("1/(1 + x1^2 + x2^2)", 2));
  const RingSpec ring{{0.0, 0.0}, 1.0, 2.0};
  const double exact = oracle::annulus_modulus(2, 1.0, 2.0);
  EXPECT_NEAR(radial_flux_lower(ring, field) / exact, 1.0, 1e-6);
  const auto up = modulus_upper(ring, field);
  EXPECT_TRUE(up.admissible);
  EXPECT_NEAR(up.value / exact, 1.0, 5e-3);
}

TEST(ModulusUpper, EuclideanCandidate) {
  const auto field = MetricField::euclidean(ChartGrid::cube(3, -3.0, 3.0, 8));
  const RingSpec ring{{0.0, 0.0, 0.0}, 1.0, oracle::kE};
  const auto up = modulus_upper(ring, field);
  EXPECT_TRUE(up.certified_analytically);
  EXPECT_NEAR(up.value / (4.0 * M_PI), 1.0, 1e-3);
}

TEST(ModulusUpper, RejectsInadmissibleCandidate) {
  const auto grid = ChartGrid::cube(2, -3.0, 3.0, 48);
  const auto field = MetricField::euclidean(grid);
  const RingSpec ring{{0.0, 0.0}, 1.0, 2.0};
  const auto weak = DensityField::from_function(grid, [](std::span<const double>) { return 0.5; });
  const auto r = modulus_upper(ring, field, weak);
  EXPECT_FALSE(r.admissible);
  EXPECT_TRUE(std::isinf(r.value));
  const auto strong = DensityField::from_function(grid, [](std::span<const double>) { return 1.5; });
  const auto s = modulus_upper(ring, field, strong);
  EXPECT_TRUE(s.admissible);
  EXPECT_GE(s.value, oracle::annulus_modulus(2, 1.0, 2.0));
}

TEST(Bracket, ContainsAnnulusModulusCoarse) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 96));
  const RingSpec ring{{0.0, 0.0}, 1.0, oracle::kE};
  const auto b = modulus_bracket(ring, field);
  EXPECT_TRUE(b.ordered());
  EXPECT_TRUE(b.contains(2.0 * M_PI)) << b.lower << " " << b.upper;
  EXPECT_LE(b.width(), 0.10 * 2.0 * M_PI);
}

TEST(Bracket, GeodesicModeIsOrdered) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 64));
  RingSpec ring{{0.0, 0.0}, 1.0, 2.0};
  ring.mode = DistanceMode::kGeodesic;
  const auto b = modulus_bracket(ring, field);
  EXPECT_TRUE(b.ordered());
  EXPECT_TRUE(std::isinf(b.flux_lower));
}

TEST(Admissibility, EmptyFamilyVacuous) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 8);
  const auto field = MetricField::euclidean(grid);
  const auto r = is_admissible(field, DensityField::zero(grid), CurveFamily::empty());
  EXPECT_TRUE(r.admissible);
  EXPECT_FALSE(r.worst_curve.has_value());
}

TEST(Admissibility, LineIntegralOfConstant) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 8);
  const auto field = MetricField::euclidean(grid);
  const auto rho = DensityField::from_function(grid, [](std::span<const double>) { return 2.0; });
  EXPECT_NEAR(line_integral(field, rho, segment({-0.5, 0.1}, {0.5, 0.1}, 10)), 2.0, 1e-12);
}

TEST(ExtendCurves, KeepsOriginalAsPrefix) {
  const auto grid = ChartGrid::cube(2, -1.0, 1.0, 16);
  CurveFamily fam;
  fam.curves.push_back(segment({-0.5, 0.0}, {0.0, 0.0}, 4));
  const auto ext = extend_curves(fam, grid, 0.3);
  ASSERT_EQ(ext.size(), 1u);
  const auto& v = ext.curves[0].vertices;
  ASSERT_GT(v.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(v[i], fam.curves[0].vertices[i]);
  EXPECT_NEAR(v.back()[0], 0.3, 1e-9);
  // Clipping at the grid boundary.
  const auto far = extend_curves(fam, grid, 5.0);
  EXPECT_LE(far.curves[0].vertices.back()[0], 1.0 + 1e-12);
}

TEST(AxiomSuite, PassesOnRingFamilies) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, 48));
  std::vector<CurveFamily> fams;
  for (int i = 0; i < 3; ++i) {
    fams.push_back(sample_ring_curves(field, RingSpec{{0.0, 0.0}, 0.8 + 0.2 * i, 2.4}, 24, i % 3, 11 + i));
  }
  const auto rep = modulus_axiom_suite(field, fams);
  EXPECT_TRUE(rep.all_passed()) << rep.failures() << " failures";
  bool saw_empty = false;
  for (const auto& c : rep.checks) saw_empty |= c.axiom == "empty";
  EXPECT_TRUE(saw_empty);
}
