#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ringmod {

/// Chart coordinates of a point. Length equals the grid dimension.
using Point = std::vector<double>;

/// Uniform tensor grid over one chart: `extents[a]` cells of width
/// `spacing[a]` along axis `a`, starting at `origin`. Nodes sit at cell
/// corners, so there are `extents[a] + 1` nodes per axis. Linear indices run
/// with axis 0 fastest.
class ChartGrid {
 public:
  ChartGrid(std::vector<double> origin, std::vector<double> spacing, std::vector<int> extents);

  /// Cube [lo, hi]^dim split into `cells` cells per axis.
  static ChartGrid cube(int dim, double lo, double hi, int cells);

  int dim() const noexcept { return static_cast<int>(origin_.size()); }
  const std::vector<double>& origin() const noexcept { return origin_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }
  const std::vector<int>& extents() const noexcept { return extents_; }

  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  double lower(int axis) const { return origin_[static_cast<std::size_t>(axis)]; }
  double upper(int axis) const;
  double max_spacing() const noexcept;
  double min_spacing() const noexcept;
  double cell_volume() const noexcept { return cell_volume_; }

  std::size_t cell_count() const noexcept { return cell_count_; }
  std::size_t node_count() const noexcept { return node_count_; }
  int nodes_along(int axis) const { return extents_[static_cast<std::size_t>(axis)] + 1; }

  std::size_t node_stride(int axis) const { return node_stride_[static_cast<std::size_t>(axis)]; }
  std::size_t cell_stride(int axis) const { return cell_stride_[static_cast<std::size_t>(axis)]; }

  std::size_t node_index(std::span<const int> idx) const;
  std::size_t cell_index(std::span<const int> idx) const;
  void node_multi_index(std::size_t node, std::span<int> idx) const;
  void cell_multi_index(std::size_t cell, std::span<int> idx) const;

  void node_position(std::size_t node, std::span<double> out) const;
  Point node_position(std::size_t node) const;
  void cell_center(std::size_t cell, std::span<double> out) const;
  Point cell_center(std::size_t cell) const;

  /// True when `p` lies in the closed grid box, with relative slack `tol`.
  bool contains(std::span<const double> p, double tol = 1e-12) const;
  /// True when the closed Euclidean ball B(center, r) lies in the grid box.
  bool contains_ball(std::span<const double> center, double r) const;
  /// Cell containing `p`; points on the upper faces map to the last cell.
  std::optional<std::size_t> cell_of(std::span<const double> p) const;
  /// Node nearest to `p` (clamped to the grid).
  std::size_t nearest_node(std::span<const double> p) const;
  bool is_boundary_node(std::size_t node) const;

  /// Same box with every spacing halved (extents doubled).
  ChartGrid refined() const;

 private:
  std::vector<double> origin_;
  std::vector<double> spacing_;
  std::vector<int> extents_;
  std::vector<std::size_t> node_stride_;
  std::vector<std::size_t> cell_stride_;
  std::size_t cell_count_ = 0;
  std::size_t node_count_ = 0;
  double cell_volume_ = 0.0;
};

}  // namespace ringmod
