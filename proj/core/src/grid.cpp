#include "ringmod/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ringmod/error.hpp"

namespace ringmod {

ChartGrid::ChartGrid(std::vector<double> origin, std::vector<double> spacing, std::vector<int> extents)
    : origin_(std::move(origin)), spacing_(std::move(spacing)), extents_(std::move(extents)) {
  const std::size_t n = origin_.size();
  if (n < 2 || n > 8) throw DomainError("chart grid needs 2 <= dim <= 8, got " + std::to_string(n));
  if (spacing_.size() == 1) spacing_.assign(n, spacing_[0]);
  if (extents_.size() == 1) extents_.assign(n, extents_[0]);
  if (spacing_.size() != n || extents_.size() != n) throw DomainError("grid origin/spacing/extents dimension mismatch");
  for (std::size_t a = 0; a < n; ++a) {
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) throw DomainError("grid spacing must be positive");
    if (extents_[a] < 2) throw DomainError("grid extents must be >= 2 cells per axis");
  }
  node_stride_.resize(n);
  cell_stride_.resize(n);
  std::size_t ns = 1;
  std::size_t cs = 1;
  cell_volume_ = 1.0;
  for (std::size_t a = 0; a < n; ++a) {
    node_stride_[a] = ns;
    cell_stride_[a] = cs;
    ns *= static_cast<std::size_t>(extents_[a] + 1);
    cs *= static_cast<std::size_t>(extents_[a]);
    cell_volume_ *= spacing_[a];
  }
  node_count_ = ns;
  cell_count_ = cs;
}

ChartGrid ChartGrid::cube(int dim, double lo, double hi, int cells) {
  if (!(hi > lo)) throw DomainError("cube grid needs hi > lo");
  return ChartGrid(std::vector<double>(static_cast<std::size_t>(dim), lo),
                   std::vector<double>(static_cast<std::size_t>(dim), (hi - lo) / cells),
                   std::vector<int>(static_cast<std::size_t>(dim), cells));
}

double ChartGrid::upper(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return origin_[a] + spacing_[a] * extents_[a];
}

double ChartGrid::max_spacing() const noexcept { return *std::max_element(spacing_.begin(), spacing_.end()); }
double ChartGrid::min_spacing() const noexcept { return *std::min_element(spacing_.begin(), spacing_.end()); }

std::size_t ChartGrid::node_index(std::span<const int> idx) const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < origin_.size(); ++a) k += static_cast<std::size_t>(idx[a]) * node_stride_[a];
  return k;
}

std::size_t ChartGrid::cell_index(std::span<const int> idx) const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < origin_.size(); ++a) k += static_cast<std::size_t>(idx[a]) * cell_stride_[a];
  return k;
}

void ChartGrid::node_multi_index(std::size_t node, std::span<int> idx) const {
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const auto len = static_cast<std::size_t>(extents_[a] + 1);
    idx[a] = static_cast<int>(node % len);
    node /= len;
  }
}

void ChartGrid::cell_multi_index(std::size_t cell, std::span<int> idx) const {
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const auto len = static_cast<std::size_t>(extents_[a]);
    idx[a] = static_cast<int>(cell % len);
    cell /= len;
  }
}

void ChartGrid::node_position(std::size_t node, std::span<double> out) const {
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const auto len = static_cast<std::size_t>(extents_[a] + 1);
    out[a] = origin_[a] + spacing_[a] * static_cast<double>(node % len);
    node /= len;
  }
}

Point ChartGrid::node_position(std::size_t node) const {
  Point p(origin_.size());
  node_position(node, p);
  return p;
}

void ChartGrid::cell_center(std::size_t cell, std::span<double> out) const {
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const auto len = static_cast<std::size_t>(extents_[a]);
    out[a] = origin_[a] + spacing_[a] * (static_cast<double>(cell % len) + 0.5);
    cell /= len;
  }
}

Point ChartGrid::cell_center(std::size_t cell) const {
  Point p(origin_.size());
  cell_center(cell, p);
  return p;
}

bool ChartGrid::contains(std::span<const double> p, double tol) const {
  if (p.size() != origin_.size()) return false;
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const double lo = origin_[a];
    const double hi = origin_[a] + spacing_[a] * extents_[a];
    const double slack = tol * (hi - lo);
    if (!(p[a] >= lo - slack && p[a] <= hi + slack)) return false;
  }
  return true;
}

bool ChartGrid::contains_ball(std::span<const double> center, double r) const {
  if (center.size() != origin_.size()) return false;
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const double lo = origin_[a];
    const double hi = origin_[a] + spacing_[a] * extents_[a];
    if (center[a] - r < lo - 1e-12 * (hi - lo) || center[a] + r > hi + 1e-12 * (hi - lo)) return false;
  }
  return true;
}

std::optional<std::size_t> ChartGrid::cell_of(std::span<const double> p) const {
  if (!contains(p, 1e-9)) return std::nullopt;
  std::size_t k = 0;
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    int i = static_cast<int>(std::floor((p[a] - origin_[a]) / spacing_[a]));
    i = std::clamp(i, 0, extents_[a] - 1);
    k += static_cast<std::size_t>(i) * cell_stride_[a];
  }
  return k;
}

std::size_t ChartGrid::nearest_node(std::span<const double> p) const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    int i = static_cast<int>(std::lround((p[a] - origin_[a]) / spacing_[a]));
    i = std::clamp(i, 0, extents_[a]);
    k += static_cast<std::size_t>(i) * node_stride_[a];
  }
  return k;
}

bool ChartGrid::is_boundary_node(std::size_t node) const {
  for (std::size_t a = 0; a < origin_.size(); ++a) {
    const auto len = static_cast<std::size_t>(extents_[a] + 1);
    const std::size_t i = node % len;
    if (i == 0 || i + 1 == len) return true;
    node /= len;
  }
  return false;
}

ChartGrid ChartGrid::refined() const {
  std::vector<double> h = spacing_;
  std::vector<int> ext = extents_;
  for (std::size_t a = 0; a < h.size(); ++a) {
    h[a] *= 0.5;
    ext[a] *= 2;
  }
  return ChartGrid(origin_, std::move(h), std::move(ext));
}

}  // namespace ringmod
