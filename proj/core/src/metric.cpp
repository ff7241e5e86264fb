#include "ringmod/metric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ringmod/error.hpp"

namespace ringmod {

namespace {

std::string format_point(std::span<const double> p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

}  // namespace

void check_spd(const Eigen::MatrixXd& g, std::span<const double> where) {
  const double scale = g.cwiseAbs().maxCoeff();
  if (!std::isfinite(scale)) throw MetricIntegrityError("non-finite metric at " + format_point(where));
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300)) {
    throw MetricIntegrityError("metric not symmetric at " + format_point(where));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success || scale <= 0.0) {
    throw MetricIntegrityError("metric not positive definite at " + format_point(where));
  }
}

struct MetricField::Impl {
  ChartGrid grid;
  MetricKind kind = MetricKind::kEuclidean;
  std::string description;
  ScalarFn factor;                       // conformal
  MatrixFn matrix;                       // matrix
  std::vector<Eigen::MatrixXd> samples;  // sampled, one per node

  explicit Impl(ChartGrid g) : grid(std::move(g)) {}

  void evaluate(std::span<const double> p, Eigen::MatrixXd& out) const {
    const int n = grid.dim();
    switch (kind) {
      case MetricKind::kEuclidean:
        out.setIdentity(n, n);
        return;
      case MetricKind::kConformal:
        out.setIdentity(n, n);
        out *= factor(p);
        return;
      case MetricKind::kMatrix:
        out.resize(n, n);
        matrix(p, out);
        return;
      case MetricKind::kSampled:
        interpolate(p, out);
        return;
    }
  }

  void interpolate(std::span<const double> p, Eigen::MatrixXd& out) const {
    const int n = grid.dim();
    out.setZero(n, n);
    int base[8];
    double frac[8];
    for (int a = 0; a < n; ++a) {
      const double s = (p[static_cast<std::size_t>(a)] - grid.lower(a)) / grid.spacing(a);
      int i = static_cast<int>(std::floor(s));
      i = std::clamp(i, 0, grid.extents()[static_cast<std::size_t>(a)] - 1);
      base[a] = i;
      frac[a] = std::clamp(s - i, 0.0, 1.0);
    }
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      std::size_t node = 0;
      for (int a = 0; a < n; ++a) {
        const int bit = (c >> a) & 1;
        w *= bit ? frac[a] : 1.0 - frac[a];
        node += static_cast<std::size_t>(base[a] + bit) * grid.node_stride(a);
      }
      if (w != 0.0) out += w * samples[node];
    }
  }

  void validate() const {
    const int n = grid.dim();
    if (kind == MetricKind::kEuclidean) return;
    Point p(static_cast<std::size_t>(n));
    Eigen::MatrixXd g(n, n);
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
      grid.node_position(node, p);
      if (kind == MetricKind::kConformal) {
        const double f = factor(p);
        if (!(f > 0.0) || !std::isfinite(f)) {
          throw MetricIntegrityError("conformal factor not positive at " + format_point(p));
        }
        continue;
      }
      if (kind == MetricKind::kSampled) {
        check_spd(samples[node], p);
      } else {
        evaluate(p, g);
        check_spd(g, p);
      }
    }
  }
};

MetricField::MetricField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

MetricField MetricField::euclidean(ChartGrid grid) {
  auto impl = std::make_shared<Impl>(std::move(grid));
  impl->kind = MetricKind::kEuclidean;
  impl->description = "euclidean";
  return MetricField(std::move(impl));
}

MetricField MetricField::conformal(ChartGrid grid, ScalarFn factor, std::string description) {
  auto impl = std::make_shared<Impl>(std::move(grid));
  impl->kind = MetricKind::kConformal;
  impl->factor = std::move(factor);
  impl->description = std::move(description);
  impl->validate();
  return MetricField(std::move(impl));
}

MetricField MetricField::conformal(ChartGrid grid, const Expression& factor) {
  return conformal(
      std::move(grid), [factor](std::span<const double> p) { return factor.evaluate(p); },
      "conformal:" + factor.text());
}

MetricField MetricField::matrix(ChartGrid grid, MatrixFn fn, std::string description) {
  auto impl = std::make_shared<Impl>(std::move(grid));
  impl->kind = MetricKind::kMatrix;
  impl->matrix = std::move(fn);
  impl->description = std::move(description);
  impl->validate();
  return MetricField(std::move(impl));
}

MetricField MetricField::matrix(ChartGrid grid, const std::vector<Expression>& table) {
  const auto n = static_cast<std::size_t>(grid.dim());
  if (table.size() != n * n) {
    throw MetricIntegrityError("matrix metric needs " + std::to_string(n * n) + " entries, got " +
                               std::to_string(table.size()));
  }
  std::string text = "matrix:";
  for (std::size_t i = 0; i < table.size(); ++i) text += (i ? ";" : "") + table[i].text();
  return matrix(
      std::move(grid),
      [table, n](std::span<const double> p, Eigen::MatrixXd& out) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table[i * n + j].evaluate(p);
          }
        }
      },
      text);
}

MetricField MetricField::sampled(ChartGrid grid, std::vector<Eigen::MatrixXd> node_values) {
  if (node_values.size() != grid.node_count()) {
    throw MetricIntegrityError("sampled metric needs one matrix per grid node");
  }
  auto impl = std::make_shared<Impl>(std::move(grid));
  impl->kind = MetricKind::kSampled;
  impl->samples = std::move(node_values);
  impl->description = "sampled";
  impl->validate();
  return MetricField(std::move(impl));
}

const ChartGrid& MetricField::grid() const noexcept { return impl_->grid; }
MetricKind MetricField::kind() const noexcept { return impl_->kind; }
const std::string& MetricField::description() const noexcept { return impl_->description; }

Eigen::MatrixXd MetricField::at(std::span<const double> p) const {
  if (!impl_->grid.contains(p, 1e-9)) throw DomainError("metric evaluated outside grid at " + format_point(p));
  Eigen::MatrixXd g(dim(), dim());
  impl_->evaluate(p, g);
  check_spd(g, p);
  return g;
}

void MetricField::evaluate(std::span<const double> p, Eigen::MatrixXd& out) const { impl_->evaluate(p, out); }

double MetricField::sqrt_det(std::span<const double> p) const {
  switch (impl_->kind) {
    case MetricKind::kEuclidean:
      return 1.0;
    case MetricKind::kConformal:
      return std::pow(impl_->factor(p), 0.5 * dim());
    default: {
      Eigen::MatrixXd g(dim(), dim());
      impl_->evaluate(p, g);
      return std::sqrt(g.determinant());
    }
  }
}

double MetricField::min_eigenvalue(std::span<const double> p) const {
  switch (impl_->kind) {
    case MetricKind::kEuclidean:
      return 1.0;
    case MetricKind::kConformal:
      return impl_->factor(p);
    default: {
      Eigen::MatrixXd g(dim(), dim());
      impl_->evaluate(p, g);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0);
    }
  }
}

double MetricField::segment_length(std::span<const double> a, std::span<const double> b) const {
  const int n = dim();
  double mid[8];
  double d[8];
  double euclid2 = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)];
    mid[i] = 0.5 * (a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)]);
    euclid2 += d[i] * d[i];
  }
  switch (impl_->kind) {
    case MetricKind::kEuclidean:
      return std::sqrt(euclid2);
    case MetricKind::kConformal:
      return std::sqrt(impl_->factor(std::span<const double>(mid, static_cast<std::size_t>(n))) * euclid2);
    default: {
      Eigen::MatrixXd g(n, n);
      impl_->evaluate(std::span<const double>(mid, static_cast<std::size_t>(n)), g);
      const Eigen::Map<const Eigen::VectorXd> dv(d, n);
      return std::sqrt(std::max(0.0, dv.dot(g * dv)));
    }
  }
}

EigenRange MetricField::eigen_range_near(std::span<const double> center, double radius) const {
  EigenRange range{std::numeric_limits<double>::infinity(), 0.0, 0};
  const ChartGrid& grid = impl_->grid;
  Point p(static_cast<std::size_t>(dim()));
  Eigen::MatrixXd g(dim(), dim());
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    grid.node_position(node, p);
    double r2 = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) r2 += (p[a] - center[a]) * (p[a] - center[a]);
    if (r2 > radius * radius) continue;
    impl_->evaluate(p, g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    range.min = std::min(range.min, es.eigenvalues()(0));
    range.max = std::max(range.max, es.eigenvalues()(dim() - 1));
    ++range.samples;
  }
  if (range.samples == 0) range.min = 0.0;
  return range;
}

MetricField MetricField::regrid(ChartGrid grid) const {
  auto impl = std::make_shared<Impl>(std::move(grid));
  impl->kind = impl_->kind;
  impl->description = impl_->description;
  impl->factor = impl_->factor;
  impl->matrix = impl_->matrix;
  if (impl_->kind == MetricKind::kSampled) {
    impl->samples.reserve(impl->grid.node_count());
    Point p(static_cast<std::size_t>(impl->grid.dim()));
    Eigen::MatrixXd g(impl->grid.dim(), impl->grid.dim());
    for (std::size_t node = 0; node < impl->grid.node_count(); ++node) {
      impl->grid.node_position(node, p);
      impl_->interpolate(p, g);
      impl->samples.push_back(g);
    }
  }
  impl->validate();
  return MetricField(std::move(impl));
}

}  // namespace ringmod
