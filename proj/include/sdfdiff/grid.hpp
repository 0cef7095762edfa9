#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sdfdiff/errors.hpp"
#include "sdfdiff/vec3.hpp"

namespace sdfdiff {

/// Cubic lattice of signed distance samples.
///
/// The grid stores N*N*N vertex values, x-fastest: flat index = i + N*(j + N*k).
/// Vertex (i,j,k) sits at origin + h*(i,j,k); cells are the N-1 intervals per
/// axis, so the bounding box is [origin, origin + (N-1)*h]^3. Values are in
/// world units and negative inside the object.
class SdfGrid {
 public:
  SdfGrid(int resolution, Vec3 origin, double spacing);
  SdfGrid(int resolution, Vec3 origin, double spacing, std::vector<double> values);

  int resolution() const { return n_; }
  const Vec3& origin() const { return origin_; }
  double spacing() const { return h_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n_) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_) * static_cast<std::size_t>(k));
  }
  Index3 unflatten(std::size_t flat) const;

  double at(int i, int j, int k) const { return values_[index(i, j, k)]; }
  double& at(int i, int j, int k) { return values_[index(i, j, k)]; }

  Vec3 vertex_position(int i, int j, int k) const {
    return {origin_.x + h_ * i, origin_.y + h_ * j, origin_.z + h_ * k};
  }

  Vec3 bbox_min() const { return origin_; }
  Vec3 bbox_max() const;
  double extent() const { return h_ * (n_ - 1); }
  Vec3 center() const;

  /// True when p lies in the bounding box, allowing `slack` world units outside.
  bool contains(const Vec3& p, double slack = 0.0) const;

  /// Cell holding p: floor((p - origin)/h) clamped to [0, N-2] per axis.
  Index3 cell_of(const Vec3& p) const;

  bool all_finite() const;

 private:
  int n_;
  Vec3 origin_;
  double h_;
  std::vector<double> values_;
};

/// Grid-shaped accumulator of dLoss/d(sample).
class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(int resolution);
  explicit GradientBuffer(const SdfGrid& like) : GradientBuffer(like.resolution()) {}

  int resolution() const { return n_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double& operator[](std::size_t flat) { return values_[flat]; }
  double operator[](std::size_t flat) const { return values_[flat]; }

  GradientBuffer& operator+=(const GradientBuffer& other);
  /// this += scale * other
  void add_scaled(const GradientBuffer& other, double scale);
  void fill(double v);
  bool all_finite() const;

 private:
  int n_ = 0;
  std::vector<double> values_;
};

/// Corner values and trilinear weights of one cell at one point.
/// Corner m = a + 2b + 4c is vertex (i+a, j+b, k+c).
struct CellSample {
  Index3 cell;
  Vec3 local;  // (p - corner0)/h, in [0,1]^3 for points inside the cell
  std::array<double, 8> weights{};
};

/// Trilinear weights for local coordinates u in the unit cell (may lie outside
/// [0,1] for extrapolation inside a fixed cell).
inline std::array<double, 8> trilinear_weights(const Vec3& u) {
  const double wx[2] = {1.0 - u.x, u.x};
  const double wy[2] = {1.0 - u.y, u.y};
  const double wz[2] = {1.0 - u.z, u.z};
  std::array<double, 8> w{};
  for (int m = 0; m < 8; ++m) w[m] = wx[m & 1] * wy[(m >> 1) & 1] * wz[(m >> 2) & 1];
  return w;
}

/// d w_m / d u along each local axis.
std::array<Vec3, 8> trilinear_weight_derivatives(const Vec3& u);

/// Flat indices of the 8 corners of a cell in corner order.
std::array<std::size_t, 8> cell_corner_indices(const SdfGrid& grid, Index3 cell);

/// Corner values of a cell in corner order.
std::array<double, 8> cell_corner_values(const SdfGrid& grid, Index3 cell);

/// Locates p in the grid (cell + weights) without a domain check.
CellSample locate(const SdfGrid& grid, const Vec3& p);

/// Local coordinates of p relative to an explicitly given cell.
CellSample locate_in_cell(const SdfGrid& grid, const Vec3& p, Index3 cell);

/// Trilinear reconstruction of the SDF at p. Throws OutOfDomain outside the box.
double trilinear(const SdfGrid& grid, const Vec3& p);

/// Trilinear reconstruction without the domain check; p is clamped into the box.
double trilinear_clamped(const SdfGrid& grid, const Vec3& p);

/// Finite-difference SDF gradient at a vertex: central differences inside,
/// one-sided first-order differences on boundary faces.
Vec3 vertex_gradient(const SdfGrid& grid, int i, int j, int k);

/// 7-point Laplacian at an interior vertex (1 <= i,j,k <= N-2).
double vertex_laplacian(const SdfGrid& grid, int i, int j, int k);

/// Samples an arbitrary world-space field at every vertex.
SdfGrid sample_field(int resolution, Vec3 origin, double spacing,
                     const std::function<double(const Vec3&)>& field);

/// Exact sphere SDF ||x - center|| - radius.
SdfGrid init_sphere(int resolution, Vec3 center, double radius, Vec3 origin, double spacing);

/// Exact torus SDF with axis along z.
SdfGrid init_torus(int resolution, Vec3 center, double major_radius, double minor_radius, Vec3 origin,
                   double spacing);

double sphere_sdf(const Vec3& p, const Vec3& center, double radius);
double torus_sdf(const Vec3& p, const Vec3& center, double major_radius, double minor_radius);

/// Spacing of an upsampled grid: (new_resolution - 1) * result == extent
/// holds exactly, so the bounding box is preserved bit-for-bit.
double upsampled_spacing(double extent, int new_resolution);

/// Resamples onto a finer lattice over the same bounding box.
SdfGrid upsample(const SdfGrid& grid, int new_resolution);

/// Largest vertex_gradient norm over the grid (Lipschitz estimate).
double max_gradient_norm(const SdfGrid& grid);

}  // namespace sdfdiff
