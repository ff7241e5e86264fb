#include "ringmod/curve_modulus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ringmod/error.hpp"
#include "ringmod/quadrature.hpp"

namespace ringmod {

const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kEmpty:
      return "empty";
    case FamilyKind::kRingRadial:
      return "ring-radial";
    case FamilyKind::kRingSpiral:
      return "ring-spiral";
    case FamilyKind::kCondenserEscape:
      return "condenser-escape";
    case FamilyKind::kUserSupplied:
      return "user-supplied";
  }
  return "unknown";
}

void RingSpec::validate(const ChartGrid& grid) const {
  if (static_cast<int>(center.size()) != grid.dim()) throw DomainError("ring center dimension mismatch");
  if (!(r1 > 0.0 && r1 < r2)) throw DomainError("ring needs 0 < r1 < r2");
  if (mode == DistanceMode::kChartEuclidean && !grid.contains_ball(center, r2)) {
    throw DomainError("closed ball B(x0, r2) leaves the grid");
  }
  if (mode == DistanceMode::kGeodesic && !grid.contains(center)) throw DomainError("ring center outside grid");
}

DensityField DensityField::zero(const ChartGrid& grid) { return DensityField{grid, std::vector<double>(grid.cell_count(), 0.0)}; }

DensityField DensityField::from_function(const ChartGrid& grid,
                                         const std::function<double(std::span<const double>)>& rho) {
  DensityField d = zero(grid);
  Point c(static_cast<std::size_t>(grid.dim()));
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.cell_center(cell, c);
    d.values[cell] = std::max(0.0, rho(c));
  }
  return d;
}

namespace {

// Visits (cell, metric length) for every segment of a curve.
template <class Visit>
void for_each_segment(const MetricField& field, const CurvePolyline& curve, Visit&& visit) {
  const ChartGrid& grid = field.grid();
  const std::size_t m = curve.vertices.size();
  Point mid(static_cast<std::size_t>(grid.dim()));
  auto seg = [&](const Point& a, const Point& b) {
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
    const auto cell = grid.cell_of(mid);
    if (!cell) throw DomainError("curve leaves the grid");
    visit(*cell, field.segment_length(a, b));
  };
  for (std::size_t i = 1; i < m; ++i) seg(curve.vertices[i - 1], curve.vertices[i]);
  if (curve.closed && m > 1) seg(curve.vertices[m - 1], curve.vertices[0]);
}

Point unit_direction_2d(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Stratified unit directions: equal angles in 2-D, a Fibonacci lattice in
// 3-D, seeded Gaussian samples otherwise.
std::vector<Point> stratified_directions(int dim, int count, bool jitter, std::mt19937_64& rng) {
  std::vector<Point> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (dim == 2) {
    const double shift = jitter ? uni(rng) : 0.0;
    for (int k = 0; k < count; ++k) dirs.push_back(unit_direction_2d(2.0 * std::numbers::pi * (k + shift) / count));
    return dirs;
  }
  if (dim == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double shift = jitter ? uni(rng) * 2.0 * std::numbers::pi : 0.0;
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k + shift;
      dirs.push_back({rad * std::cos(phi), rad * std::sin(phi), z});
    }
    return dirs;
  }
  std::normal_distribution<double> gauss;
  for (int k = 0; k < count; ++k) {
    Point d(static_cast<std::size_t>(dim));
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : d) {
        v = gauss(rng);
        norm += v * v;
      }
    } while (norm < 1e-20);
    norm = std::sqrt(norm);
    for (double& v : d) v /= norm;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

// Unit vector orthogonal to `d`.
Point tangent_to(const Point& d, std::mt19937_64& rng) {
  if (d.size() == 2) return {-d[1], d[0]};
  std::normal_distribution<double> gauss;
  for (;;) {
    Point e(d.size());
    for (double& v : e) v = gauss(rng);
    const double proj = std::inner_product(e.begin(), e.end(), d.begin(), 0.0);
    double norm = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      e[k] -= proj * d[k];
      norm += e[k] * e[k];
    }
    if (norm > 1e-12) {
      norm = std::sqrt(norm);
      for (double& v : e) v /= norm;
      return e;
    }
  }
}

// Chart radius at which the interpolated distance along a ray reaches `level`.
double ray_level(const DistanceField& dist, const Point& center, const Point& dir, double level, double step) {
  const ChartGrid& grid = dist.grid();
  Point p(center.size());
  auto at = [&](double t) {
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = center[k] + t * dir[k];
    return p;
  };
  double lo = 0.0;
  double hi = step;
  while (true) {
    at(hi);
    if (!grid.contains(p, 1e-9)) throw DomainError("geodesic ring level set leaves the grid");
    if (dist.interpolate(p) >= level) break;
    lo = hi;
    hi += step;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    at(mid);
    (dist.interpolate(p) >= level ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

std::vector<Point> sphere_directions(int dim, int count, bool jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return stratified_directions(dim, count, jitter, rng);
}

double line_integral(const MetricField& field, const DensityField& rho, const CurvePolyline& curve) {
  double sum = 0.0;
  for_each_segment(field, curve, [&](std::size_t cell, double len) { sum += rho.values[cell] * len; });
  return sum;
}

CurveFamily sample_ring_curves(const MetricField& field, const RingSpec& ring, int count, int perturbation,
                               std::uint64_t seed) {
  const ChartGrid& grid = field.grid();
  ring.validate(grid);
  if (count < 1) throw DomainError("curve count must be >= 1");
  perturbation = std::clamp(perturbation, 0, 2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  CurveFamily fam;
  fam.kind = perturbation == 0 ? FamilyKind::kRingRadial : FamilyKind::kRingSpiral;
  fam.ring = ring;
  fam.perturbation = perturbation;
  fam.seed = seed;
  fam.curves.reserve(static_cast<std::size_t>(count));

  const std::vector<Point> dirs = stratified_directions(grid.dim(), count, perturbation > 0, rng);
  const double step = grid.min_spacing() / 4.0;
  std::optional<DistanceField> dist;
  if (ring.mode == DistanceMode::kGeodesic) dist = DistanceField::from_point(field, ring.center);

  const double amplitude = (ring.r2 - ring.r1) / 4.0;
  const std::size_t n = ring.center.size();
  for (int k = 0; k < count; ++k) {
    const Point& d = dirs[static_cast<std::size_t>(k)];
    double t1 = ring.r1;
    double t2 = ring.r2;
    if (dist) {
      t1 = ray_level(*dist, ring.center, d, ring.r1, step);
      t2 = ray_level(*dist, ring.center, d, ring.r2, step);
    }
    const bool bent = perturbation > 0 && (k % 2 == 1);
    CurvePolyline curve;
    if (!bent) {
      const int segs = std::max(1, static_cast<int>(std::ceil((t2 - t1) / step)));
      for (int i = 0; i <= segs; ++i) {
        const double t = t1 + (t2 - t1) * i / segs;
        Point p(n);
        for (std::size_t a = 0; a < n; ++a) p[a] = ring.center[a] + t * d[a];
        curve.vertices.push_back(std::move(p));
      }
    } else {
      // Tangential offset a(s) along the radial parameter s in [0, 1].
      const int knots = perturbation == 1 ? 3 : 5;
      const bool spiral = perturbation == 2 && (k % 4 == 3);
      std::vector<double> offs(static_cast<std::size_t>(knots + 2), 0.0);
      const double sign = uni(rng) < 0 ? -1.0 : 1.0;
      for (int j = 1; j <= knots + 1; ++j) {
        const double s = static_cast<double>(j) / (knots + 1);
        offs[static_cast<std::size_t>(j)] = spiral ? sign * amplitude * s : amplitude * uni(rng);
      }
      const Point e = tangent_to(d, rng);
      const int segs = 2 * std::max(1, static_cast<int>(std::ceil((t2 - t1 + 2.0 * amplitude * knots) / step)));
      for (int i = 0; i <= segs; ++i) {
        const double s = static_cast<double>(i) / segs;
        const double pos = s * (knots + 1);
        const int j = std::min(knots, static_cast<int>(std::floor(pos)));
        const double f = pos - j;
        const double a = (1.0 - f) * offs[static_cast<std::size_t>(j)] + f * offs[static_cast<std::size_t>(j + 1)];
        const double t = t1 + (t2 - t1) * s;
        const double ang = a / t;
        Point p(n);
        for (std::size_t q = 0; q < n; ++q) p[q] = ring.center[q] + t * (std::cos(ang) * d[q] + std::sin(ang) * e[q]);
        curve.vertices.push_back(std::move(p));
      }
    }
    fam.curves.push_back(std::move(curve));
  }
  return fam;
}

AdmissibilityReport is_admissible(const MetricField& field, const DensityField& rho, const CurveFamily& family,
                                  double tol) {
  AdmissibilityReport rep;
  if (family.is_empty()) return rep;
  rep.worst_integral = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.curves.size(); ++i) {
    const double v = line_integral(field, rho, family.curves[i]);
    if (v < rep.worst_integral) {
      rep.worst_integral = v;
      rep.worst_curve = i;
    }
  }
  rep.admissible = rep.worst_integral >= 1.0 - tol;
  return rep;
}

// ------------------------------------------------------------ lower bound

namespace {

// Constraint rows in CSR form over the compressed set of cells the family
// touches.
struct ConstraintSystem {
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> col;
  std::vector<double> len;
  std::vector<std::size_t> cell_of_col;
  std::vector<double> weight;  // sqrt(det g) * |cell|
  std::size_t skipped = 0;
};

ConstraintSystem build_system(const CurveFamily& family, const MetricField& field) {
  const ChartGrid& grid = field.grid();
  ConstraintSystem sys;
  std::vector<std::int64_t> local(grid.cell_count(), -1);
  sys.row_start.push_back(0);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (const CurvePolyline& curve : family.curves) {
    if (curve.degenerate()) {
      ++sys.skipped;
      continue;
    }
    row.clear();
    for_each_segment(field, curve, [&](std::size_t cell, double length) {
      if (local[cell] < 0) {
        local[cell] = static_cast<std::int64_t>(sys.cell_of_col.size());
        sys.cell_of_col.push_back(cell);
      }
      row.emplace_back(static_cast<std::uint32_t>(local[cell]), length);
    });
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (out > 0 && row[out - 1].first == row[i].first) {
        row[out - 1].second += row[i].second;
      } else {
        row[out++] = row[i];
      }
    }
    row.resize(out);
    for (const auto& [c, l] : row) {
      if (l <= 0.0) continue;
      sys.col.push_back(c);
      sys.len.push_back(l);
    }
    sys.row_start.push_back(sys.col.size());
  }
  Point center(static_cast<std::size_t>(grid.dim()));
  sys.weight.resize(sys.cell_of_col.size());
  for (std::size_t j = 0; j < sys.cell_of_col.size(); ++j) {
    grid.cell_center(sys.cell_of_col[j], center);
    sys.weight[j] = field.sqrt_det(center) * grid.cell_volume();
  }
  return sys;
}

// rho(s) = (s / (n w))^(1/(n-1)) with its derivative in s.
struct DensityMap {
  int n;
  double exponent;

  double rho(double s, double w) const {
    if (s <= 0.0) return 0.0;
    const double base = s / (n * w);
    if (n == 2) return base;
    if (n == 3) return std::sqrt(base);
    return std::pow(base, exponent);
  }
};

}  // namespace

ModulusLowerResult modulus_lower(const CurveFamily& family, const MetricField& field, const SolverOptions& opts) {
  const ChartGrid& grid = field.grid();
  ModulusLowerResult res{.density = DensityField::zero(grid)};
  res.converged = true;
  if (family.is_empty()) return res;

  const ConstraintSystem sys = build_system(family, field);
  const std::size_t rows = sys.row_start.size() - 1;
  const std::size_t cols = sys.cell_of_col.size();
  res.curves = rows;
  res.cells = cols;
  res.skipped_degenerate = sys.skipped;
  if (rows == 0) return res;

  const int n = grid.dim();
  const DensityMap map{n, 1.0 / (n - 1)};
  std::vector<double> lambda(rows, 0.0);
  std::vector<double> s(cols, 0.0);
  std::vector<double> rho(cols, 0.0);
  res.converged = false;

  // phi(delta) = sum_c A_c rho(s_c + delta A_c) - 1 for row r.
  auto phi = [&](std::size_t b, std::size_t e, double delta) {
    double v = -1.0;
    for (std::size_t k = b; k < e; ++k) v += sys.len[k] * map.rho(s[sys.col[k]] + delta * sys.len[k], sys.weight[sys.col[k]]);
    return v;
  };

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t b = sys.row_start[r];
      const std::size_t e = sys.row_start[r + 1];
      double delta = 0.0;
      if (n == 2) {
        double integral = 0.0;
        double slope = 0.0;
        for (std::size_t k = b; k < e; ++k) {
          const std::uint32_t c = sys.col[k];
          integral += sys.len[k] * rho[c];
          slope += sys.len[k] * sys.len[k] / (2.0 * sys.weight[c]);
        }
        delta = std::max((1.0 - integral) / slope, -lambda[r]);
      } else {
        const double lo_limit = -lambda[r];
        const double f0 = phi(b, e, 0.0);
        double lo, hi;
        if (f0 >= 0.0) {
          if (phi(b, e, lo_limit) >= 0.0) {
            delta = lo_limit;
            goto apply;
          }
          lo = lo_limit;
          hi = 0.0;
        } else {
          lo = 0.0;
          hi = std::max(lambda[r], 1e-12);
          while (phi(b, e, hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
          }
        }
        // Safeguarded Newton on the monotone function phi.
        delta = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
          double f = -1.0;
          double df = 0.0;
          for (std::size_t k = b; k < e; ++k) {
            const std::uint32_t c = sys.col[k];
            const double sc = s[c] + delta * sys.len[k];
            const double rc = map.rho(sc, sys.weight[c]);
            f += sys.len[k] * rc;
            if (sc > 0.0) df += sys.len[k] * sys.len[k] * rc * map.exponent / sc;
          }
          if (f > 0.0) {
            hi = delta;
          } else {
            lo = delta;
          }
          if (std::abs(f) < 1e-13 || hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) break;
          double next = (df > 0.0 && std::isfinite(df)) ? delta - f / df : 0.5 * (lo + hi);
          if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
          delta = next;
        }
      }
    apply:
      if (delta == 0.0) continue;
      lambda[r] += delta;
      for (std::size_t k = sys.row_start[r]; k < e; ++k) {
        const std::uint32_t c = sys.col[k];
        s[c] = std::max(0.0, s[c] + delta * sys.len[k]);
        rho[c] = map.rho(s[c], sys.weight[c]);
      }
    }

    // Dual value and the feasible rescaling of rho.
    double energy = 0.0;
    for (std::size_t c = 0; c < cols; ++c) energy += sys.weight[c] * std::pow(rho[c], n);
    const double dual = std::accumulate(lambda.begin(), lambda.end(), 0.0) - (n - 1) * energy;
    double min_integral = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows; ++r) {
      double v = 0.0;
      for (std::size_t k = sys.row_start[r]; k < sys.row_start[r + 1]; ++k) v += sys.len[k] * rho[sys.col[k]];
      min_integral = std::min(min_integral, v);
    }
    res.iterations = sweep;
    if (min_integral > 0.0) {
      const double primal = energy / std::pow(min_integral, n);
      res.value = std::max(res.value, dual);
      res.primal = primal;
      res.rel_gap = (primal - res.value) / primal;
      if (res.rel_gap < opts.rel_gap) {
        res.converged = true;
        break;
      }
    }
  }

  double min_integral = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r) {
    double v = 0.0;
    for (std::size_t k = sys.row_start[r]; k < sys.row_start[r + 1]; ++k) v += sys.len[k] * rho[sys.col[k]];
    min_integral = std::min(min_integral, v);
  }
  if (min_integral > 0.0) {
    for (std::size_t c = 0; c < cols; ++c) res.density.values[sys.cell_of_col[c]] = rho[c] / min_integral;
  }
  return res;
}

// ------------------------------------------------------------ upper bound

double radial_flux_lower(const RingSpec& ring, const MetricField& field) {
  const ChartGrid& grid = field.grid();
  ring.validate(grid);
  if (ring.mode != DistanceMode::kChartEuclidean) throw DomainError("radial flux bound needs a chart-Euclidean ring");
  const int n = grid.dim();
  const double np = static_cast<double>(n) / (n - 1);
  const bool euclid = field.is_euclidean();
  const double log_ratio = std::log(ring.r2 / ring.r1);

  Point theta(static_cast<std::size_t>(n));
  Point x(static_cast<std::size_t>(n));
  Eigen::MatrixXd g(n, n);
  auto kernel = [&]() {
    if (euclid) return log_ratio;
    auto integrand = [&](double t) {
      for (int a = 0; a < n; ++a) x[a] = ring.center[a] + t * theta[a];
      field.evaluate(x, g);
      const Eigen::Map<const Eigen::VectorXd> v(theta.data(), n);
      const double ell = std::sqrt(v.dot(g * v));
      return std::pow(ell, np) * std::pow(g.determinant(), 0.5 * (1.0 - np)) / t;
    };
    return quad::log_panels(integrand, ring.r1, ring.r2, 8);
  };

  // Hyperspherical angles: Gauss-Legendre in the polar angles, periodic
  // trapezoid in the azimuth.
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const int polar_panels = n <= 3 ? 4 : 1;
  const int azimuth = n <= 3 ? 256 : 64;
  std::vector<std::pair<double, double>> polar;  // (node, weight) on [0, pi]
  for (int p = 0; p < polar_panels; ++p) {
    const double a = std::numbers::pi * p / polar_panels;
    const double b = std::numbers::pi * (p + 1) / polar_panels;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t k = 0; k < Gauss::abscissa().size(); ++k) {
      const double z = Gauss::abscissa()[k];
      const double w = Gauss::weights()[k] * half;
      polar.emplace_back(mid + half * z, w);
      if (z != 0.0) polar.emplace_back(mid - half * z, w);
    }
  }
  const int polar_dims = n - 2;
  std::vector<std::size_t> idx(static_cast<std::size_t>(polar_dims), 0);
  double total = 0.0;
  for (;;) {
    double weight = 1.0;
    double sin_prod = 1.0;
    for (int j = 0; j < polar_dims; ++j) {
      const auto [phi, w] = polar[idx[j]];
      theta[j] = sin_prod * std::cos(phi);
      weight *= w * std::pow(std::sin(phi), n - 2 - j);
      sin_prod *= std::sin(phi);
    }
    for (int k = 0; k < azimuth; ++k) {
      const double psi = 2.0 * std::numbers::pi * k / azimuth;
      theta[n - 2] = sin_prod * std::cos(psi);
      theta[n - 1] = sin_prod * std::sin(psi);
      total += weight * (2.0 * std::numbers::pi / azimuth) * std::pow(kernel(), 1 - n);
    }
    int j = 0;
    while (j < polar_dims && ++idx[j] == polar.size()) idx[j++] = 0;
    if (j == polar_dims) break;
  }
  return total;
}

int default_ring_curve_count(const ChartGrid& grid, const RingSpec& ring) {
  const int n = grid.dim();
  const double h = grid.min_spacing();
  if (n == 2) return std::max(256, static_cast<int>(std::ceil(2.0 * std::numbers::pi * ring.r2 / (0.5 * h))));
  // Unit-sphere area omega_{n-1} = 2 pi^(n/2) / Gamma(n/2).
  const double omega = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  const double area = omega * std::pow(ring.r2, n - 1);
  return std::max(256, static_cast<int>(std::ceil(area / std::pow(h, n - 1))));
}

ModulusUpperResult modulus_upper(const RingSpec& ring, const MetricField& field, const SphereQuadrature& quad) {
  const ChartGrid& grid = field.grid();
  ring.validate(grid);
  const int n = grid.dim();
  const double log_ratio = std::log(ring.r2 / ring.r1);
  ModulusUpperResult res;

  if (ring.mode == DistanceMode::kChartEuclidean) {
    std::optional<QField> weight;
    if (!field.is_euclidean()) {
      weight.emplace([&field, n](std::span<const double> x) { return std::pow(field.min_eigenvalue(x), -0.5 * n); },
                     "lambda_min^(-n/2)");
    }
    res.value = radial_volume_integral(
        field, ring.center, ring.r1, ring.r2, [&](double t) { return std::pow(t * log_ratio, -n); },
        weight ? &*weight : nullptr, quad, 8);
    res.certified_analytically = true;
    return res;
  }

  // Geodesic rings: 1/(d log(r2/r1)) on cells inside the ring, certified on a
  // dense perturbed sample and rescaled if a curve falls short.
  const DistanceField dist = DistanceField::from_point(field, ring.center);
  DensityField rho = DensityField::from_function(grid, [&](std::span<const double> c) {
    const double d = dist.interpolate(c);
    return (d > ring.r1 && d < ring.r2) ? 1.0 / (d * log_ratio) : 0.0;
  });
  const CurveFamily dense = sample_ring_curves(field, ring, 2 * default_ring_curve_count(grid, ring), 2, 0);
  res.check = is_admissible(field, rho, dense, 0.0);
  if (res.check.worst_integral > 0.0 && res.check.worst_integral < 1.0) {
    for (double& v : rho.values) v /= res.check.worst_integral;
  }
  Point c(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    if (rho.values[cell] == 0.0) continue;
    grid.cell_center(cell, c);
    sum += std::pow(rho.values[cell], n) * field.sqrt_det(c);
  }
  res.value = sum * grid.cell_volume();
  res.admissible = res.check.worst_integral > 0.0;
  return res;
}

ModulusUpperResult modulus_upper(const RingSpec& ring, const MetricField& field, const DensityField& candidate,
                                 double tol, std::uint64_t seed) {
  const ChartGrid& grid = field.grid();
  ring.validate(grid);
  if (candidate.values.size() != grid.cell_count()) throw DomainError("candidate density built for a different grid");
  ModulusUpperResult res;
  const CurveFamily dense = sample_ring_curves(field, ring, 2 * default_ring_curve_count(grid, ring), 2, seed);
  res.check = is_admissible(field, candidate, dense, tol);
  res.admissible = res.check.admissible;
  if (!res.admissible) {
    res.value = std::numeric_limits<double>::infinity();
    return res;
  }
  const int n = grid.dim();
  Point c(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    const double v = candidate.values[cell];
    if (v == 0.0) continue;
    grid.cell_center(cell, c);
    sum += std::pow(v, n) * field.sqrt_det(c);
  }
  res.value = sum * grid.cell_volume();
  return res;
}

ModulusBracket modulus_bracket(const RingSpec& ring, const MetricField& field, const BracketPlan& plan) {
  ring.validate(field.grid());
  const int count = plan.curve_count > 0 ? plan.curve_count : default_ring_curve_count(field.grid(), ring);
  const CurveFamily fam = sample_ring_curves(field, ring, count, plan.perturbation, plan.seed);
  const ModulusLowerResult lo = modulus_lower(fam, field, plan.solver);
  const ModulusUpperResult up = modulus_upper(ring, field, plan.quad);
  ModulusBracket b;
  b.program_lower = lo.value;
  b.flux_lower = ring.mode == DistanceMode::kChartEuclidean ? radial_flux_lower(ring, field)
                                                             : std::numeric_limits<double>::infinity();
  b.lower = std::min(b.program_lower, b.flux_lower);
  b.upper = up.value;
  b.iterations = lo.iterations;
  b.lower_converged = lo.converged;
  b.upper_certified = up.certified_analytically || up.admissible;
  b.curve_count = count;
  return b;
}

// ------------------------------------------------------------ axiom suite

bool AxiomReport::all_passed() const { return failures() == 0; }

std::size_t AxiomReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const AxiomCheck& c) { return !c.passed; }));
}

CurveFamily extend_curves(const CurveFamily& family, const ChartGrid& grid, double extra) {
  CurveFamily out = family;
  out.kind = FamilyKind::kUserSupplied;
  for (CurvePolyline& curve : out.curves) {
    if (curve.vertices.size() < 2) continue;
    const Point a = curve.vertices[curve.vertices.size() - 2];
    const Point b = curve.vertices.back();
    Point u(a.size());
    double len = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      u[k] = b[k] - a[k];
      len += u[k] * u[k];
    }
    len = std::sqrt(len);
    if (len == 0.0) continue;
    for (double& v : u) v /= len;
    const int steps = std::max(1, static_cast<int>(std::ceil(extra / len)));
    const double dt = extra / steps;
    for (int i = 1; i <= steps; ++i) {
      Point p(b.size());
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = b[k] + i * dt * u[k];
      if (!grid.contains(p, 0.0)) break;
      curve.vertices.push_back(std::move(p));
    }
  }
  return out;
}

AxiomReport modulus_axiom_suite(const MetricField& field, std::span<const CurveFamily> families,
                                const AxiomOptions& opts) {
  AxiomReport rep;
  auto modulus = [&](const CurveFamily& f) { return modulus_lower(f, field, opts.solver).value; };
  auto check = [&](std::string axiom, std::string detail, double lhs, double rhs) {
    rep.checks.push_back({std::move(axiom), std::move(detail), lhs, rhs, lhs <= rhs + opts.tol});
  };

  const double m_empty = modulus(CurveFamily::empty());
  rep.checks.push_back({"empty", "M(empty) = 0", m_empty, 0.0, m_empty == 0.0});

  std::mt19937_64 rng(opts.seed);
  std::vector<double> values;
  for (std::size_t i = 0; i < families.size(); ++i) {
    const CurveFamily& fam = families[i];
    const std::string tag = "family " + std::to_string(i);
    const double m = modulus(fam);
    values.push_back(m);
    if (fam.size() < 2) continue;

    CurveFamily half = fam;
    half.curves.resize((fam.size() + 1) / 2);
    check("monotone", tag + ": first half subset", modulus(half), m);

    CurveFamily part_a = fam;
    CurveFamily part_b = fam;
    part_a.curves.clear();
    part_b.curves.clear();
    std::bernoulli_distribution coin(0.5);
    for (const CurvePolyline& c : fam.curves) (coin(rng) ? part_a : part_b).curves.push_back(c);
    check("subadditive", tag + ": random split", m, modulus(part_a) + modulus(part_b));

    double diameter = 0.0;
    for (int a = 0; a < field.dim(); ++a) diameter = std::max(diameter, field.grid().upper(a) - field.grid().lower(a));
    const CurveFamily longer = extend_curves(fam, field.grid(), 0.05 * diameter);
    check("minorized", tag + ": prolonged curves", modulus(longer), m);
  }
  for (std::size_t i = 0; i + 1 < families.size(); ++i) {
    CurveFamily uni = families[i];
    uni.curves.insert(uni.curves.end(), families[i + 1].curves.begin(), families[i + 1].curves.end());
    check("subadditive", "union of families " + std::to_string(i) + " and " + std::to_string(i + 1), modulus(uni),
          values[i] + values[i + 1]);
  }
  return rep;
}

}  // namespace ringmod
