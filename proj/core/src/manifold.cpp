#include "ringmod/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "ringmod/error.hpp"
#include "ringmod/quadrature.hpp"

namespace ringmod {

// ---------------------------------------------------------------- curves

std::size_t CurvePolyline::segment_count() const noexcept {
  if (vertices.size() < 2) return 0;
  return vertices.size() - 1 + (closed ? 1 : 0);
}

bool CurvePolyline::degenerate() const {
  if (vertices.size() < 2) return true;
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    if (vertices[i] == vertices[i - 1]) return true;
  }
  return false;
}

LengthResult curve_length(const MetricField& field, const CurvePolyline& curve) {
  if (curve.degenerate()) return {0.0, true};
  const ChartGrid& grid = field.grid();
  for (const Point& v : curve.vertices) {
    if (!grid.contains(v, 1e-9)) throw DomainError("curve vertex outside grid");
  }
  double total = 0.0;
  const std::size_t m = curve.vertices.size();
  for (std::size_t i = 1; i < m; ++i) total += field.segment_length(curve.vertices[i - 1], curve.vertices[i]);
  if (curve.closed) total += field.segment_length(curve.vertices[m - 1], curve.vertices[0]);
  return {total, false};
}

// --------------------------------------------------------------- volumes

CellRegion CellRegion::all(const ChartGrid& grid) {
  CellRegion r(grid);
  std::fill(r.mask_.begin(), r.mask_.end(), 1);
  return r;
}

CellRegion CellRegion::from_predicate(const ChartGrid& grid,
                                      const std::function<bool(std::span<const double>)>& inside) {
  CellRegion r(grid);
  Point c(static_cast<std::size_t>(grid.dim()));
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.cell_center(cell, c);
    if (inside(c)) r.mask_[cell] = 1;
  }
  return r;
}

std::size_t CellRegion::size() const { return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1)); }

std::vector<std::size_t> CellRegion::cells() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

double volume_measure(const MetricField& field, const CellRegion& region) {
  const ChartGrid& grid = field.grid();
  if (region.capacity() != grid.cell_count()) throw DomainError("cell region built for a different grid");
  Point c(static_cast<std::size_t>(grid.dim()));
  double sum = 0.0;
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    if (!region.contains(cell)) continue;
    grid.cell_center(cell, c);
    sum += field.sqrt_det(c);
  }
  return sum * grid.cell_volume();
}

// --------------------------------------------------------------- spheres

namespace {

// Hyperspherical parametrisation of S(center, t) in R^n by u_0..u_{n-2}:
// polar angles u_0..u_{n-3} in [0, pi] (midpoint rule), azimuth u_{n-2} in
// (-pi, pi] (periodic trapezoid). x_k = t prod_{j<k} sin u_j cos u_k for
// k <= n-2, and x_{n-1} = t prod_{j<=n-2} sin u_j.
class SphereRule {
 public:
  SphereRule(int dim, int points) : n_(dim), points_(points) {
    const int polar = n_ - 2;
    polar_sin_.resize(static_cast<std::size_t>(points));
    polar_cos_.resize(static_cast<std::size_t>(points));
    az_sin_.resize(static_cast<std::size_t>(points));
    az_cos_.resize(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      const double th = std::numbers::pi * (i + 0.5) / points;
      polar_sin_[static_cast<std::size_t>(i)] = std::sin(th);
      polar_cos_[static_cast<std::size_t>(i)] = std::cos(th);
      const double ph = -std::numbers::pi + 2.0 * std::numbers::pi * (i + 1) / points;
      az_sin_[static_cast<std::size_t>(i)] = std::sin(ph);
      az_cos_[static_cast<std::size_t>(i)] = std::cos(ph);
    }
    weight_ = 2.0 * std::numbers::pi / points;
    for (int k = 0; k < polar; ++k) weight_ *= std::numbers::pi / points;
  }

  // visit(x, J) with J the n x (n-1) Jacobian of the unit-sphere map at the
  // angles of x; visit must be homogeneous of degree n - 1 in J.
  template <class Visit>
  double integrate(std::span<const double> center, double t, Visit&& visit) const {
    const int n = n_;
    const int m = n - 1;
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    double s[8];
    double c[8];
    double x[8];
    Eigen::MatrixXd jac(n, m);
    double total = 0.0;
    for (;;) {
      for (int j = 0; j < m; ++j) {
        const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(j)]);
        if (j < m - 1) {
          s[j] = polar_sin_[i];
          c[j] = polar_cos_[i];
        } else {
          s[j] = az_sin_[i];
          c[j] = az_cos_[i];
        }
      }
      // x_k and its derivatives.
      for (int k = 0; k < n; ++k) {
        const int last = (k <= n - 2) ? k : n - 2;  // factors j = 0..last
        double value = t;
        for (int j = 0; j <= last; ++j) value *= (j < k || k == n - 1) ? s[j] : c[j];
        x[k] = center[static_cast<std::size_t>(k)] + value;
        for (int mm = 0; mm < m; ++mm) {
          if (mm > last) {
            jac(k, mm) = 0.0;
            continue;
          }
          double d = 1.0;
          for (int j = 0; j <= last; ++j) {
            const bool is_sin = (j < k || k == n - 1);
            if (j == mm) {
              d *= is_sin ? c[j] : -s[j];
            } else {
              d *= is_sin ? s[j] : c[j];
            }
          }
          jac(k, mm) = d;
        }
      }
      total += visit(std::span<const double>(x, static_cast<std::size_t>(n)), jac);
      int j = 0;
      while (j < m && ++idx[static_cast<std::size_t>(j)] == points_) {
        idx[static_cast<std::size_t>(j)] = 0;
        ++j;
      }
      if (j == m) break;
    }
    // The Jacobian is taken on the unit sphere; area scales as t^(n-1).
    return total * weight_ * std::pow(t, m);
  }

 private:
  int n_;
  int points_;
  double weight_ = 0.0;
  std::vector<double> polar_sin_, polar_cos_, az_sin_, az_cos_;
};

int max_points_for(int dim, int requested) {
  // Keep N^(n-1) <= 2^18 nodes.
  int cap = 1;
  while (std::pow(2.0 * cap, dim - 1) <= 262144.0) cap *= 2;
  return std::max(4, std::min(requested, cap));
}

template <class Visit>
double converge_sphere(int dim, std::span<const double> center, double t, const SphereQuadrature& quad,
                       Visit&& visit) {
  const int max_n = max_points_for(dim, quad.max_points);
  int npts = std::min(std::max(4, quad.min_points), max_n);
  double prev = SphereRule(dim, npts).integrate(center, t, visit);
  while (npts < max_n) {
    npts *= 2;
    const double cur = SphereRule(dim, npts).integrate(center, t, visit);
    if (!std::isfinite(cur)) return cur;
    if (std::abs(cur - prev) <= quad.rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

void require_sphere_in_grid(const ChartGrid& grid, std::span<const double> center, double r) {
  if (!(r > 0.0)) throw DomainError("sphere radius must be positive");
  if (!grid.contains_ball(center, r)) throw DomainError("sphere exits the grid");
}

double geodesic_surface(const MetricField& field, const SphereSpec& s, const QField* q) {
  const ChartGrid& grid = field.grid();
  const DistanceField dist = DistanceField::from_point(field, s.center);
  const double w = 2.0 * grid.max_spacing();
  double boundary_min = std::numeric_limits<double>::infinity();
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (grid.is_boundary_node(node)) boundary_min = std::min(boundary_min, dist.at_node(node));
  }
  if (boundary_min <= s.radius + w) throw DomainError("geodesic sphere exits the grid");

  const int n = grid.dim();
  Point c(static_cast<std::size_t>(n));
  std::vector<int> idx(static_cast<std::size_t>(n));
  Eigen::MatrixXd g(n, n);
  Eigen::VectorXd grad(n);
  double sum = 0.0;
  const int corners = 1 << n;
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.cell_multi_index(cell, idx);
    // Cell-center distance and gradient from the 2^n corner values.
    double dc = 0.0;
    grad.setZero();
    for (int k = 0; k < corners; ++k) {
      std::size_t node = 0;
      for (int a = 0; a < n; ++a) node += static_cast<std::size_t>(idx[static_cast<std::size_t>(a)] + ((k >> a) & 1)) * grid.node_stride(a);
      const double v = dist.at_node(node);
      dc += v;
      for (int a = 0; a < n; ++a) grad(a) += ((k >> a) & 1 ? v : -v) / grid.spacing(a);
    }
    dc /= corners;
    grad /= corners / 2;
    const double off = std::abs(dc - s.radius);
    if (off >= w) continue;
    grid.cell_center(cell, c);
    field.evaluate(c, g);
    const double grad_norm = std::sqrt(std::max(0.0, grad.dot(g.ldlt().solve(grad))));
    const double qv = q ? (*q)(c) : 1.0;
    sum += qv * (1.0 - off / w) / w * grad_norm * std::sqrt(g.determinant());
  }
  return sum * grid.cell_volume();
}

}  // namespace

double surface_measure(const MetricField& field, const SphereSpec& sphere, const SphereQuadrature& quad) {
  if (sphere.mode == DistanceMode::kGeodesic) {
    if (!(sphere.radius > 0.0)) throw DomainError("sphere radius must be positive");
    return geodesic_surface(field, sphere, nullptr);
  }
  require_sphere_in_grid(field.grid(), sphere.center, sphere.radius);
  const int n = field.dim();
  if (field.is_euclidean()) {
    return converge_sphere(n, sphere.center, sphere.radius, quad, [](std::span<const double>, const Eigen::MatrixXd& jac) {
      return std::sqrt((jac.transpose() * jac).determinant());
    });
  }
  Eigen::MatrixXd g(n, n);
  return converge_sphere(n, sphere.center, sphere.radius, quad,
                         [&](std::span<const double> x, const Eigen::MatrixXd& jac) {
                           field.evaluate(x, g);
                           return std::sqrt(std::max(0.0, (jac.transpose() * g * jac).determinant()));
                         });
}

double surface_measure(const MetricField& field, const SphereSpec& sphere, const QField& q,
                       const SphereQuadrature& quad) {
  if (sphere.mode == DistanceMode::kGeodesic) {
    if (!(sphere.radius > 0.0)) throw DomainError("sphere radius must be positive");
    return geodesic_surface(field, sphere, &q);
  }
  require_sphere_in_grid(field.grid(), sphere.center, sphere.radius);
  const int n = field.dim();
  Eigen::MatrixXd g(n, n);
  const bool flat = field.is_euclidean();
  return converge_sphere(n, sphere.center, sphere.radius, quad,
                         [&](std::span<const double> x, const Eigen::MatrixXd& jac) {
                           const double qv = q(x);
                           if (qv == 0.0) return 0.0;
                           if (flat) return qv * std::sqrt((jac.transpose() * jac).determinant());
                           field.evaluate(x, g);
                           return qv * std::sqrt(std::max(0.0, (jac.transpose() * g * jac).determinant()));
                         });
}

double shell_volume_density(const MetricField& field, std::span<const double> center, double t, const QField* q,
                            const SphereQuadrature& quad) {
  require_sphere_in_grid(field.grid(), center, t);
  const int n = field.dim();
  return converge_sphere(n, center, t, quad, [&](std::span<const double> x, const Eigen::MatrixXd& jac) {
    const double qv = q ? (*q)(x) : 1.0;
    if (qv == 0.0) return 0.0;
    return qv * field.sqrt_det(x) * std::sqrt((jac.transpose() * jac).determinant());
  });
}

double radial_volume_integral(const MetricField& field, std::span<const double> center, double r_lo, double r_hi,
                              const std::function<double(double)>& radial, const QField* q,
                              const SphereQuadrature& quad, int panels_per_decade) {
  if (!(r_hi > r_lo) || r_lo < 0.0) throw DomainError("radial integral needs 0 <= r_lo < r_hi");
  require_sphere_in_grid(field.grid(), center, r_hi);
  const double lo = r_lo > 0.0 ? r_lo : r_hi * std::ldexp(1.0, -40);
  auto integrand = [&](double t) {
    const double f = radial(t);
    if (f == 0.0) return 0.0;
    return f * shell_volume_density(field, center, t, q, quad);
  };
  const double value = quad::log_panels(integrand, lo, r_hi, panels_per_decade);
  if (!std::isfinite(value)) throw IntegrationError("radial volume integral is not finite");
  return value;
}

// ------------------------------------------------------------- distances

DistanceField DistanceField::from_point(const MetricField& field, std::span<const double> source,
                                        const std::vector<char>* blocked) {
  const ChartGrid& grid = field.grid();
  if (!grid.contains(source, 1e-9)) throw DomainError("distance source outside grid");
  DistanceField df(grid, Point(source.begin(), source.end()));
  const int n = grid.dim();
  df.dist_.assign(grid.node_count(), std::numeric_limits<double>::infinity());

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  // Seed with the corners of the source cell.
  const std::size_t cell = *grid.cell_of(source);
  std::vector<int> base(static_cast<std::size_t>(n));
  grid.cell_multi_index(cell, base);
  Point p(static_cast<std::size_t>(n));
  for (int k = 0; k < (1 << n); ++k) {
    std::size_t node = 0;
    for (int a = 0; a < n; ++a) node += static_cast<std::size_t>(base[static_cast<std::size_t>(a)] + ((k >> a) & 1)) * grid.node_stride(a);
    if (blocked && (*blocked)[node]) continue;
    grid.node_position(node, p);
    const double d = field.segment_length(source, p);
    if (d < df.dist_[node]) {
      df.dist_[node] = d;
      heap.emplace(d, node);
    }
  }

  // Stencil offsets {-1,0,1}^n \ {0}.
  std::vector<std::vector<int>> offsets;
  const int stencil = static_cast<int>(std::pow(3, n));
  for (int s = 0; s < stencil; ++s) {
    std::vector<int> off(static_cast<std::size_t>(n));
    int rem = s;
    bool zero = true;
    for (int a = 0; a < n; ++a) {
      off[static_cast<std::size_t>(a)] = rem % 3 - 1;
      rem /= 3;
      zero = zero && off[static_cast<std::size_t>(a)] == 0;
    }
    if (!zero) offsets.push_back(std::move(off));
  }

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::vector<int> nb(static_cast<std::size_t>(n));
  Point q(static_cast<std::size_t>(n));
  while (!heap.empty()) {
    const auto [d, node] = heap.top();
    heap.pop();
    if (d > df.dist_[node]) continue;
    grid.node_multi_index(node, idx);
    grid.node_position(node, p);
    for (const auto& off : offsets) {
      bool ok = true;
      for (int a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        nb[ua] = idx[ua] + off[ua];
        if (nb[ua] < 0 || nb[ua] > grid.extents()[ua]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const std::size_t m = grid.node_index(nb);
      if (blocked && (*blocked)[m]) continue;
      for (int a = 0; a < n; ++a) q[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)] + off[static_cast<std::size_t>(a)] * grid.spacing(a);
      const double nd = d + field.segment_length(p, q);
      if (nd < df.dist_[m]) {
        df.dist_[m] = nd;
        heap.emplace(nd, m);
      }
    }
  }
  return df;
}

double DistanceField::to_point(const MetricField& field, std::span<const double> p) const {
  if (!grid_.contains(p, 1e-9)) throw DomainError("distance target outside grid");
  const int n = grid_.dim();
  const std::size_t cell = *grid_.cell_of(p);
  std::vector<int> base(static_cast<std::size_t>(n));
  grid_.cell_multi_index(cell, base);
  double best = std::numeric_limits<double>::infinity();
  if (grid_.cell_of(source_) == cell) best = field.segment_length(source_, p);
  Point c(static_cast<std::size_t>(n));
  for (int k = 0; k < (1 << n); ++k) {
    std::size_t node = 0;
    for (int a = 0; a < n; ++a) node += static_cast<std::size_t>(base[static_cast<std::size_t>(a)] + ((k >> a) & 1)) * grid_.node_stride(a);
    if (!std::isfinite(dist_[node])) continue;
    grid_.node_position(node, c);
    best = std::min(best, dist_[node] + field.segment_length(c, p));
  }
  return best;
}

double DistanceField::interpolate(std::span<const double> p) const {
  const int n = grid_.dim();
  int base[8];
  double frac[8];
  for (int a = 0; a < n; ++a) {
    const double s = (p[static_cast<std::size_t>(a)] - grid_.lower(a)) / grid_.spacing(a);
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, grid_.extents()[static_cast<std::size_t>(a)] - 1);
    base[a] = i;
    frac[a] = std::clamp(s - i, 0.0, 1.0);
  }
  double v = 0.0;
  for (int k = 0; k < (1 << n); ++k) {
    double w = 1.0;
    std::size_t node = 0;
    for (int a = 0; a < n; ++a) {
      const int bit = (k >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      node += static_cast<std::size_t>(base[a] + bit) * grid_.node_stride(a);
    }
    if (w != 0.0) v += w * dist_[node];
  }
  return v;
}

double geodesic_distance(const MetricField& field, std::span<const double> p, std::span<const double> q,
                         const std::vector<char>* blocked) {
  if (std::equal(p.begin(), p.end(), q.begin(), q.end())) return 0.0;
  return DistanceField::from_point(field, p, blocked).to_point(field, q);
}

RefinedDistance geodesic_distance_refined(const MetricField& field, std::span<const double> p,
                                          std::span<const double> q, int max_levels, double rel_tol) {
  RefinedDistance out;
  out.value = geodesic_distance(field, p, q);
  MetricField current = field;
  for (int level = 1; level <= max_levels; ++level) {
    current = current.regrid(current.grid().refined());
    const double next = geodesic_distance(current, p, q);
    const double change = std::abs(next - out.value);
    out.value = next;
    out.levels = level;
    if (change <= rel_tol * next) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------- Ahlfors

double ball_volume(const MetricField& field, std::span<const double> center, double radius, DistanceMode mode) {
  if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
  if (mode == DistanceMode::kChartEuclidean) {
    return radial_volume_integral(field, center, 0.0, radius, [](double) { return 1.0; });
  }
  const ChartGrid& grid = field.grid();
  const DistanceField dist = DistanceField::from_point(field, center);
  Point c(static_cast<std::size_t>(grid.dim()));
  double sum = 0.0;
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.cell_center(cell, c);
    if (dist.interpolate(c) < radius) sum += field.sqrt_det(c);
  }
  return sum * grid.cell_volume();
}

AhlforsReport ahlfors_probe(const MetricField& field, std::span<const double> center, std::span<const double> radii,
                            DistanceMode mode) {
  if (radii.size() < 3) throw InsufficientDataError("Ahlfors probe needs at least 3 radii");
  AhlforsReport rep;
  rep.radii.assign(radii.begin(), radii.end());
  for (double r : radii) rep.volumes.push_back(ball_volume(field, center, r, mode));

  const auto m = static_cast<double>(radii.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = std::log(rep.radii[i]);
    const double y = std::log(rep.volumes[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw InsufficientDataError("Ahlfors probe needs distinct radii");
  rep.q_fit = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - rep.q_fit * sx) / m;
  rep.prefactor = std::exp(intercept);
  double ss = 0.0;
  rep.c_fit = 1.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = std::log(rep.radii[i]);
    const double y = std::log(rep.volumes[i]);
    const double e = y - (intercept + rep.q_fit * x);
    ss += e * e;
    const double ratio = rep.volumes[i] / std::pow(rep.radii[i], rep.q_fit);
    rep.c_fit = std::max({rep.c_fit, ratio, 1.0 / ratio});
  }
  rep.residual = std::sqrt(ss / m);
  const int n = field.dim();
  rep.consistent_with_dim = std::abs(rep.q_fit - n) <= 0.05 * n;
  return rep;
}

}  // namespace ringmod
