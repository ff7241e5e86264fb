#include "ringmod/condenser.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ringmod/error.hpp"

namespace ringmod {

// ------------------------------------------------------------ construction

Condenser::Condenser(ChartGrid grid, std::vector<NodeLabel> labels, std::string description)
    : grid_(std::move(grid)), labels_(std::move(labels)), description_(std::move(description)) {
  if (plate_nodes() == 0) throw DegenerateCondenserError("condenser plate C has no grid nodes");
}

std::size_t Condenser::plate_nodes() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), NodeLabel::kPlate));
}

std::size_t Condenser::free_nodes() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), NodeLabel::kFree));
}

Condenser Condenser::from_predicates(const ChartGrid& grid, const Predicate& in_a, const Predicate& in_c,
                                     std::string description) {
  std::vector<NodeLabel> labels(grid.node_count(), NodeLabel::kOutside);
  Point p(static_cast<std::size_t>(grid.dim()));
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    grid.node_position(node, p);
    const bool a = !grid.is_boundary_node(node) && in_a(p);
    const bool c = in_c(p);
    if (c && !a) throw DegenerateCondenserError("C meets the boundary of A at node " + std::to_string(node));
    labels[node] = c ? NodeLabel::kPlate : (a ? NodeLabel::kFree : NodeLabel::kOutside);
  }
  return Condenser(grid, std::move(labels), std::move(description));
}

Condenser Condenser::round(const ChartGrid& grid, Point center, double r_inner, double r_outer) {
  if (static_cast<int>(center.size()) != grid.dim()) throw DomainError("condenser center dimension mismatch");
  if (!(r_inner > 0.0 && r_outer > 0.0)) throw DomainError("round condenser needs positive radii");
  if (!(r_inner < r_outer)) throw DegenerateCondenserError("round condenser: C = B(x0, r_inner) is not inside A = B(x0, r_outer)");
  auto dist2 = [center](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - center[k]) * (x[k] - center[k]);
    return s;
  };
  Condenser c = from_predicates(
      grid, [&](std::span<const double> x) { return dist2(x) < r_outer * r_outer; },
      [&](std::span<const double> x) { return dist2(x) <= r_inner * r_inner; }, "round");
  c.ring_ = RingSpec{std::move(center), r_inner, r_outer, DistanceMode::kChartEuclidean};
  return c;
}

Condenser Condenser::box(const ChartGrid& grid, const Point& a_lo, const Point& a_hi, const Point& c_lo,
                         const Point& c_hi) {
  const std::size_t n = static_cast<std::size_t>(grid.dim());
  if (a_lo.size() != n || a_hi.size() != n || c_lo.size() != n || c_hi.size() != n) {
    throw DomainError("box corner dimension mismatch");
  }
  const double slack = 1e-9 * grid.min_spacing();
  return from_predicates(
      grid,
      [&](std::span<const double> x) {
        for (std::size_t k = 0; k < n; ++k)
          if (!(x[k] > a_lo[k] + slack && x[k] < a_hi[k] - slack)) return false;
        return true;
      },
      [&](std::span<const double> x) {
        for (std::size_t k = 0; k < n; ++k)
          if (x[k] < c_lo[k] - slack || x[k] > c_hi[k] + slack) return false;
        return true;
      },
      "box");
}

Condenser Condenser::from_cells(const ChartGrid& grid, const CellRegion& a, const CellRegion& c) {
  const int n = grid.dim();
  std::vector<NodeLabel> labels(grid.node_count(), NodeLabel::kOutside);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::vector<int> cidx(static_cast<std::size_t>(n));
  const int corners = 1 << n;
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    grid.node_multi_index(node, idx);
    bool all_a = true;
    bool any_c = false;
    for (int corner = 0; corner < corners; ++corner) {
      bool exists = true;
      for (int k = 0; k < n; ++k) {
        cidx[k] = idx[k] - ((corner >> k) & 1);
        if (cidx[k] < 0 || cidx[k] >= grid.extents()[k]) exists = false;
      }
      if (!exists) {
        all_a = false;
        continue;
      }
      const std::size_t cell = grid.cell_index(cidx);
      all_a = all_a && a.contains(cell);
      any_c = any_c || c.contains(cell);
    }
    if (any_c && !all_a) throw DegenerateCondenserError("C meets the boundary of A at node " + std::to_string(node));
    labels[node] = any_c ? NodeLabel::kPlate : (all_a ? NodeLabel::kFree : NodeLabel::kOutside);
  }
  return Condenser(grid, std::move(labels), "cells");
}

// ------------------------------------------------------------ P1 assembly

namespace {

// Kuhn simplices of the unit cube: one per axis permutation, walking the
// corners 0 -> e_p0 -> e_p0 + e_p1 -> ...
struct KuhnTable {
  int n;
  std::vector<std::vector<int>> axis;    // permutation
  std::vector<std::vector<int>> corner;  // n + 1 corner ids (bit k = offset on axis k)

  explicit KuhnTable(int dim) : n(dim) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      axis.push_back(perm);
      std::vector<int> cs{0};
      for (int k = 0; k < n; ++k) cs.push_back(cs.back() | (1 << perm[k]));
      corner.push_back(std::move(cs));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
};

// Per-cell data: vol_simplex * sqrt(det g) and g^-1 at the cell center.
struct CellMetric {
  std::vector<double> scale;
  std::vector<double> ginv;  // n*n per cell, row-major
};

CellMetric cell_metric(const MetricField& field, std::size_t simplices) {
  const ChartGrid& grid = field.grid();
  const int n = grid.dim();
  CellMetric cm;
  cm.scale.resize(grid.cell_count());
  cm.ginv.resize(grid.cell_count() * static_cast<std::size_t>(n * n));
  Point c(static_cast<std::size_t>(n));
  Eigen::MatrixXd g(n, n);
  const double vol = grid.cell_volume() / static_cast<double>(simplices);
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.cell_center(cell, c);
    field.evaluate(c, g);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const double det_root = llt.matrixL().toDenseMatrix().diagonal().prod();
    cm.scale[cell] = vol * det_root;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cm.ginv[cell * n * n + static_cast<std::size_t>(i * n + j)] = inv(i, j);
  }
  return cm;
}

// Walks every cell with its base node and local corner -> node offsets.
template <class Visit>
void for_each_cell(const ChartGrid& grid, Visit&& visit) {
  const int n = grid.dim();
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
    grid.cell_multi_index(cell, idx);
    visit(cell, grid.node_index(idx));
  }
}

std::vector<std::ptrdiff_t> corner_offsets(const ChartGrid& grid) {
  const int n = grid.dim();
  std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(1 << n), 0);
  for (int c = 0; c < (1 << n); ++c)
    for (int k = 0; k < n; ++k)
      if ((c >> k) & 1) off[static_cast<std::size_t>(c)] += static_cast<std::ptrdiff_t>(grid.node_stride(k));
  return off;
}

// Simplex gradient q = grad^T g^-1 grad for the given corner values.
double simplex_quadratic(const KuhnTable& kt, std::size_t s, const double* ginv, const double* h, const double* cu,
                         double* grad) {
  const int n = kt.n;
  for (int k = 0; k < n; ++k) {
    const int ax = kt.axis[s][k];
    grad[ax] = (cu[kt.corner[s][k + 1]] - cu[kt.corner[s][k]]) / h[ax];
  }
  double q = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q += grad[i] * ginv[i * n + j] * grad[j];
  return std::max(q, 0.0);
}

// Node-centred stencil operator over the full 3^n neighbourhood.
class StencilOperator {
 public:
  StencilOperator(const ChartGrid& grid) : n_(grid.dim()) {
    width_ = 1;
    for (int k = 0; k < n_; ++k) width_ *= 3;
    offset_.resize(static_cast<std::size_t>(width_));
    for (int slot = 0; slot < width_; ++slot) {
      int rest = slot;
      std::ptrdiff_t off = 0;
      for (int k = 0; k < n_; ++k) {
        off += static_cast<std::ptrdiff_t>((rest % 3) - 1) * static_cast<std::ptrdiff_t>(grid.node_stride(k));
        rest /= 3;
      }
      offset_[static_cast<std::size_t>(slot)] = off;
    }
    coef_.assign(grid.node_count() * static_cast<std::size_t>(width_), 0.0);
    center_ = (width_ - 1) / 2;
  }

  void clear() { std::fill(coef_.begin(), coef_.end(), 0.0); }
  int slot_between(int ci, int cj) const {
    int slot = 0;
    int mul = 1;
    for (int k = 0; k < n_; ++k) {
      slot += (((cj >> k) & 1) - ((ci >> k) & 1) + 1) * mul;
      mul *= 3;
    }
    return slot;
  }
  double& at(std::size_t node, int slot) { return coef_[node * static_cast<std::size_t>(width_) + static_cast<std::size_t>(slot)]; }
  double diag(std::size_t node) const { return coef_[node * static_cast<std::size_t>(width_) + static_cast<std::size_t>(center_)]; }

  double apply_row(std::size_t node, const std::vector<double>& x) const {
    const double* c = &coef_[node * static_cast<std::size_t>(width_)];
    const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(node);
    double sum = 0.0;
    for (int s = 0; s < width_; ++s) {
      if (c[s] != 0.0) sum += c[s] * x[static_cast<std::size_t>(base + offset_[static_cast<std::size_t>(s)])];
    }
    return sum;
  }

 private:
  int n_;
  int width_;
  int center_;
  std::vector<std::ptrdiff_t> offset_;
  std::vector<double> coef_;
};

struct Assembly {
  const Condenser& cond;
  const KuhnTable& kt;
  const CellMetric& cm;
  std::vector<std::ptrdiff_t> corner_off;
  std::vector<double> h;
};

// Adds sum_s w_s * scale * B_s^T g^-1 B_s into the operator rows of free nodes.
void assemble(const Assembly& as, const std::vector<double>& simplex_weight, StencilOperator& op) {
  const ChartGrid& grid = as.cond.grid();
  const int n = grid.dim();
  const int corners = 1 << n;
  const std::size_t ns = as.kt.axis.size();
  std::vector<double> local(static_cast<std::size_t>(corners * corners));
  op.clear();
  for_each_cell(grid, [&](std::size_t cell, std::size_t base) {
    bool touches_free = false;
    for (int c = 0; c < corners; ++c)
      touches_free = touches_free ||
                     as.cond.label(base + static_cast<std::size_t>(as.corner_off[static_cast<std::size_t>(c)])) == NodeLabel::kFree;
    if (!touches_free) return;
    std::fill(local.begin(), local.end(), 0.0);
    const double* ginv = &as.cm.ginv[cell * static_cast<std::size_t>(n * n)];
    for (std::size_t s = 0; s < ns; ++s) {
      const double w = as.cm.scale[cell] * simplex_weight[cell * ns + s];
      const auto& ax = as.kt.axis[s];
      const auto& cs = as.kt.corner[s];
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          const double m = w * ginv[ax[k] * n + ax[l]] / (as.h[ax[k]] * as.h[ax[l]]);
          local[cs[k + 1] * corners + cs[l + 1]] += m;
          local[cs[k + 1] * corners + cs[l]] -= m;
          local[cs[k] * corners + cs[l + 1]] -= m;
          local[cs[k] * corners + cs[l]] += m;
        }
      }
    }
    for (int ci = 0; ci < corners; ++ci) {
      const std::size_t ni = base + static_cast<std::size_t>(as.corner_off[static_cast<std::size_t>(ci)]);
      if (as.cond.label(ni) != NodeLabel::kFree) continue;
      for (int cj = 0; cj < corners; ++cj) {
        const double v = local[ci * corners + cj];
        if (v != 0.0) op.at(ni, op.slot_between(ci, cj)) += v;
      }
    }
  });
}

// Solves the free-node block for u with fixed values held; Jacobi-PCG.
struct CgOutcome {
  int iterations = 0;
  bool converged = false;
};

CgOutcome solve_free(const StencilOperator& op, const std::vector<std::size_t>& free, std::vector<double>& u,
                     double rel_tol, int max_iter) {
  const std::size_t m = free.size();
  std::vector<double> r(m), z(m), p(m), ap(m);
  std::vector<double> dir(u.size(), 0.0);  // full-size search direction, zero on fixed nodes
  double rhs_norm = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    r[i] = -op.apply_row(free[i], u);
  }
  // Scale reference: the operator applied to the fixed data alone.
  {
    std::vector<double> fixed_only = u;
    for (std::size_t node : free) fixed_only[node] = 0.0;
    for (std::size_t i = 0; i < m; ++i) rhs_norm += std::pow(op.apply_row(free[i], fixed_only), 2);
    rhs_norm = std::sqrt(rhs_norm);
  }
  CgOutcome out;
  if (rhs_norm == 0.0) rhs_norm = 1.0;
  double rz = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = r[i] / op.diag(free[i]);
    p[i] = z[i];
    rz += r[i] * z[i];
  }
  for (int it = 0; it < max_iter; ++it) {
    double rn = 0.0;
    for (double v : r) rn += v * v;
    if (std::sqrt(rn) <= rel_tol * rhs_norm) {
      out.converged = true;
      out.iterations = it;
      return out;
    }
    for (std::size_t i = 0; i < m; ++i) dir[free[i]] = p[i];
    double pap = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      ap[i] = op.apply_row(free[i], dir);
      pap += p[i] * ap[i];
    }
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    double rz_new = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      u[free[i]] += alpha * p[i];
      r[i] -= alpha * ap[i];
      z[i] = r[i] / op.diag(free[i]);
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
    out.iterations = it + 1;
  }
  return out;
}

double energy_of(const MetricField& field, const KuhnTable& kt, const CellMetric& cm,
                 const std::vector<std::ptrdiff_t>& corner_off, const std::vector<double>& h,
                 std::span<const double> u, std::vector<double>* weights, double reg) {
  const ChartGrid& grid = field.grid();
  const int n = grid.dim();
  const int corners = 1 << n;
  const std::size_t ns = kt.axis.size();
  std::vector<double> cu(static_cast<std::size_t>(corners));
  std::vector<double> grad(static_cast<std::size_t>(n));
  double total = 0.0;
  for_each_cell(grid, [&](std::size_t cell, std::size_t base) {
    bool flat = true;
    for (int c = 0; c < corners; ++c) {
      cu[c] = u[base + static_cast<std::size_t>(corner_off[static_cast<std::size_t>(c)])];
      flat = flat && cu[c] == cu[0];
    }
    const double* ginv = &cm.ginv[cell * static_cast<std::size_t>(n * n)];
    for (std::size_t s = 0; s < ns; ++s) {
      const double q = flat ? 0.0 : simplex_quadratic(kt, s, ginv, h.data(), cu.data(), grad.data());
      if (q > 0.0) total += cm.scale[cell] * std::pow(q, 0.5 * n);
      if (weights) (*weights)[cell * ns + s] = n == 2 ? 1.0 : std::pow(q + reg, 0.5 * (n - 2));
    }
  });
  return total;
}

}  // namespace

double potential_energy(const MetricField& field, std::span<const double> u) {
  const ChartGrid& grid = field.grid();
  if (u.size() != grid.node_count()) throw DomainError("potential has the wrong number of node values");
  const KuhnTable kt(grid.dim());
  const CellMetric cm = cell_metric(field, kt.axis.size());
  return energy_of(field, kt, cm, corner_offsets(grid), grid.spacing(), u, nullptr, 0.0);
}

CapacityResult capacity(const Condenser& cond, const MetricField& field, const CapacityOptions& opts) {
  const ChartGrid& grid = cond.grid();
  if (grid.dim() != field.dim() || grid.node_count() != field.grid().node_count()) {
    throw DomainError("condenser and metric live on different grids");
  }
  const int n = grid.dim();
  const KuhnTable kt(n);
  const CellMetric cm = cell_metric(field, kt.axis.size());
  const Assembly as{cond, kt, cm, corner_offsets(grid), grid.spacing()};
  const std::size_t ns = kt.axis.size();

  std::vector<std::size_t> free;
  std::vector<double> u(grid.node_count(), 0.0);
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (cond.label(node) == NodeLabel::kFree) free.push_back(node);
    if (cond.label(node) == NodeLabel::kPlate) u[node] = 1.0;
  }

  CapacityResult res;
  std::vector<double> weights(grid.cell_count() * ns, 1.0);
  StencilOperator op(grid);
  assemble(as, weights, op);
  CgOutcome cg = solve_free(op, free, u, opts.cg_rel_tol, opts.cg_max_iterations);
  res.cg_iterations += cg.iterations;
  for (double& v : u) v = std::clamp(v, 0.0, 1.0);
  double energy = energy_of(field, kt, cm, as.corner_off, as.h, u, &weights, opts.regularization);

  if (n == 2) {
    res.converged = cg.converged;
  } else {
    std::vector<double> trial;
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
      assemble(as, weights, op);
      trial = u;
      cg = solve_free(op, free, trial, opts.cg_rel_tol, opts.cg_max_iterations);
      res.cg_iterations += cg.iterations;
      for (std::size_t node : free) {
        u[node] = std::clamp((1.0 - opts.damping) * u[node] + opts.damping * trial[node], 0.0, 1.0);
      }
      const double next = energy_of(field, kt, cm, as.corner_off, as.h, u, &weights, opts.regularization);
      res.outer_iterations = outer;
      const double change = std::abs(next - energy);
      energy = next;
      if (change <= opts.energy_rel_tol * std::max(energy, 1e-300)) {
        res.converged = true;
        break;
      }
    }
  }
  res.value = energy < 1e-9 ? 0.0 : energy;
  res.potential.values = std::move(u);
  return res;
}

// ------------------------------------------------------------ escape family

CurveFamily condenser_curve_family(const Condenser& cond, const MetricField& field, int count, std::uint64_t seed) {
  const ChartGrid& grid = cond.grid();
  const int n = grid.dim();
  if (cond.round_ring()) {
    const RingSpec& ring = *cond.round_ring();
    CurveFamily fam =
        sample_ring_curves(field, ring, count > 0 ? count : default_ring_curve_count(grid, ring), 0, seed);
    fam.kind = FamilyKind::kCondenserEscape;
    return fam;
  }
  if (count <= 0) {
    int longest = *std::max_element(grid.extents().begin(), grid.extents().end());
    count = n == 2 ? 4 * longest : static_cast<int>(std::pow(longest, n - 1));
  }

  Point centroid(static_cast<std::size_t>(n), 0.0);
  Point p(static_cast<std::size_t>(n));
  std::size_t plates = 0;
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (!cond.in_c(node)) continue;
    grid.node_position(node, p);
    for (int k = 0; k < n; ++k) centroid[k] += p[k];
    ++plates;
  }
  for (double& v : centroid) v /= static_cast<double>(plates);

  CurveFamily fam;
  fam.kind = FamilyKind::kCondenserEscape;
  fam.seed = seed;
  const double step = grid.min_spacing() / 4.0;
  for (const Point& d : sphere_directions(n, count, seed != 0, seed)) {
    auto at = [&](double t) {
      for (int k = 0; k < n; ++k) p[k] = centroid[k] + t * d[k];
      return grid.contains(p, 0.0);
    };
    double t_plate = -1.0;
    double t_last_a = -1.0;
    for (double t = 0.0; at(t); t += step) {
      const std::size_t node = grid.nearest_node(p);
      if (!cond.in_a(node)) break;
      if (cond.in_c(node)) t_plate = t;
      t_last_a = t;
    }
    if (t_plate < 0.0 || t_last_a - t_plate < step) continue;
    CurvePolyline curve;
    for (double t = t_plate; t <= t_last_a + 0.5 * step; t += step) {
      at(t);
      curve.vertices.push_back(p);
    }
    fam.curves.push_back(std::move(curve));
  }
  return fam;
}

CapModulusReport cap_equals_modulus_check(const Condenser& cond, const MetricField& field,
                                          const CapModulusOptions& opts) {
  CapModulusReport rep;
  rep.cap = capacity(cond, field, opts.capacity);
  if (cond.round_ring()) {
    rep.bracket = modulus_bracket(*cond.round_ring(), field, opts.bracket);
  } else {
    const CurveFamily fam = condenser_curve_family(cond, field, opts.bracket.curve_count, opts.bracket.seed);
    const ModulusLowerResult lo = modulus_lower(fam, field, opts.bracket.solver);
    ModulusBracket& b = rep.bracket;
    b.program_lower = lo.value;
    b.flux_lower = std::numeric_limits<double>::infinity();
    b.lower = lo.value;
    b.upper = rep.cap.value;
    b.iterations = lo.iterations;
    b.lower_converged = lo.converged;
    b.upper_certified = rep.cap.converged;
    b.curve_count = static_cast<int>(fam.size());
  }
  rep.tol_abs = opts.tol * rep.midpoint();
  rep.agree = rep.cap.value >= rep.bracket.lower - rep.tol_abs && rep.cap.value <= rep.bracket.upper + rep.tol_abs;
  return rep;
}

}  // namespace ringmod
