#include "sdfdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdfdiff {

namespace {

void check_shape(int resolution, double spacing) {
  if (resolution < 2) throw InvalidArgument("grid resolution must be >= 2, got " + std::to_string(resolution));
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidArgument("grid spacing must be positive and finite");
}

std::size_t cube(int n) { return static_cast<std::size_t>(n) * n * n; }

}  // namespace

SdfGrid::SdfGrid(int resolution, Vec3 origin, double spacing)
    : n_(resolution), origin_(origin), h_(spacing) {
  check_shape(resolution, spacing);
  values_.assign(cube(resolution), 0.0);
}

SdfGrid::SdfGrid(int resolution, Vec3 origin, double spacing, std::vector<double> values)
    : n_(resolution), origin_(origin), h_(spacing), values_(std::move(values)) {
  check_shape(resolution, spacing);
  if (values_.size() != cube(resolution)) {
    throw InvalidArgument("grid value count " + std::to_string(values_.size()) + " does not match resolution^3 = " +
                          std::to_string(cube(resolution)));
  }
}

Index3 SdfGrid::unflatten(std::size_t flat) const {
  const auto n = static_cast<std::size_t>(n_);
  return {static_cast<int>(flat % n), static_cast<int>((flat / n) % n), static_cast<int>(flat / (n * n))};
}

Vec3 SdfGrid::bbox_max() const {
  const double e = extent();
  return {origin_.x + e, origin_.y + e, origin_.z + e};
}

Vec3 SdfGrid::center() const {
  const double half = 0.5 * extent();
  return {origin_.x + half, origin_.y + half, origin_.z + half};
}

bool SdfGrid::contains(const Vec3& p, double slack) const {
  const Vec3 lo = bbox_min();
  const Vec3 hi = bbox_max();
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] >= lo[a] - slack && p[a] <= hi[a] + slack)) return false;
  }
  return true;
}

Index3 SdfGrid::cell_of(const Vec3& p) const {
  auto axis = [&](double coord, double o) {
    const double f = std::floor((coord - o) / h_);
    return static_cast<int>(std::clamp(f, 0.0, static_cast<double>(n_ - 2)));
  };
  return {axis(p.x, origin_.x), axis(p.y, origin_.y), axis(p.z, origin_.z)};
}

bool SdfGrid::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GradientBuffer::GradientBuffer(int resolution) : n_(resolution) {
  if (resolution < 2) throw InvalidArgument("gradient buffer resolution must be >= 2");
  values_.assign(cube(resolution), 0.0);
}

GradientBuffer& GradientBuffer::operator+=(const GradientBuffer& other) {
  add_scaled(other, 1.0);
  return *this;
}

void GradientBuffer::add_scaled(const GradientBuffer& other, double scale) {
  if (other.n_ != n_) throw InvalidArgument("gradient buffer shapes differ");
  for (std::size_t q = 0; q < values_.size(); ++q) values_[q] += scale * other.values_[q];
}

void GradientBuffer::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool GradientBuffer::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::array<Vec3, 8> trilinear_weight_derivatives(const Vec3& u) {
  const double wx[2] = {1.0 - u.x, u.x};
  const double wy[2] = {1.0 - u.y, u.y};
  const double wz[2] = {1.0 - u.z, u.z};
  const double dw[2] = {-1.0, 1.0};
  std::array<Vec3, 8> d{};
  for (int m = 0; m < 8; ++m) {
    const int a = m & 1, b = (m >> 1) & 1, c = (m >> 2) & 1;
    d[m] = {dw[a] * wy[b] * wz[c], wx[a] * dw[b] * wz[c], wx[a] * wy[b] * dw[c]};
  }
  return d;
}

std::array<std::size_t, 8> cell_corner_indices(const SdfGrid& grid, Index3 cell) {
  std::array<std::size_t, 8> idx{};
  for (int m = 0; m < 8; ++m) idx[m] = grid.index(cell.i + (m & 1), cell.j + ((m >> 1) & 1), cell.k + ((m >> 2) & 1));
  return idx;
}

std::array<double, 8> cell_corner_values(const SdfGrid& grid, Index3 cell) {
  const auto idx = cell_corner_indices(grid, cell);
  std::array<double, 8> d{};
  const auto vals = grid.values();
  for (int m = 0; m < 8; ++m) d[m] = vals[idx[m]];
  return d;
}

CellSample locate_in_cell(const SdfGrid& grid, const Vec3& p, Index3 cell) {
  const Vec3 c0 = grid.vertex_position(cell.i, cell.j, cell.k);
  const double h = grid.spacing();
  CellSample s;
  s.cell = cell;
  s.local = {(p.x - c0.x) / h, (p.y - c0.y) / h, (p.z - c0.z) / h};
  s.weights = trilinear_weights(s.local);
  return s;
}

CellSample locate(const SdfGrid& grid, const Vec3& p) { return locate_in_cell(grid, p, grid.cell_of(p)); }

double trilinear_clamped(const SdfGrid& grid, const Vec3& p) {
  const Vec3 q = cwise_max(grid.bbox_min(), cwise_min(grid.bbox_max(), p));
  const CellSample s = locate(grid, q);
  const auto d = cell_corner_values(grid, s.cell);
  double f = 0.0;
  for (int m = 0; m < 8; ++m) f += s.weights[m] * d[m];
  return f;
}

double trilinear(const SdfGrid& grid, const Vec3& p) {
  if (!grid.contains(p, 1e-9 * grid.spacing())) throw OutOfDomain("trilinear: point outside the grid bounding box");
  return trilinear_clamped(grid, p);
}

Vec3 vertex_gradient(const SdfGrid& grid, int i, int j, int k) {
  const int n = grid.resolution();
  if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) throw InvalidArgument("vertex index out of range");
  const double h = grid.spacing();
  auto axis = [&](int c, auto value_at) {
    if (c == 0) return (value_at(1) - value_at(0)) / h;
    if (c == n - 1) return (value_at(n - 1) - value_at(n - 2)) / h;
    return (value_at(c + 1) - value_at(c - 1)) / (2.0 * h);
  };
  return {axis(i, [&](int x) { return grid.at(x, j, k); }), axis(j, [&](int y) { return grid.at(i, y, k); }),
          axis(k, [&](int z) { return grid.at(i, j, z); })};
}

double vertex_laplacian(const SdfGrid& grid, int i, int j, int k) {
  const int n = grid.resolution();
  if (i < 1 || j < 1 || k < 1 || i > n - 2 || j > n - 2 || k > n - 2) {
    throw InvalidArgument("vertex_laplacian requires an interior vertex");
  }
  const double h = grid.spacing();
  const double sum = grid.at(i + 1, j, k) + grid.at(i - 1, j, k) + grid.at(i, j + 1, k) + grid.at(i, j - 1, k) +
                     grid.at(i, j, k + 1) + grid.at(i, j, k - 1);
  return (sum - 6.0 * grid.at(i, j, k)) / (h * h);
}

SdfGrid sample_field(int resolution, Vec3 origin, double spacing, const std::function<double(const Vec3&)>& field) {
  SdfGrid g(resolution, origin, spacing);
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) g.at(i, j, k) = field(g.vertex_position(i, j, k));
  return g;
}

double sphere_sdf(const Vec3& p, const Vec3& center, double radius) { return norm(p - center) - radius; }

double torus_sdf(const Vec3& p, const Vec3& center, double major_radius, double minor_radius) {
  const Vec3 q = p - center;
  const double ring = std::hypot(q.x, q.y) - major_radius;
  return std::hypot(ring, q.z) - minor_radius;
}

SdfGrid init_sphere(int resolution, Vec3 center, double radius, Vec3 origin, double spacing) {
  if (!(radius > 0.0)) throw InvalidArgument("sphere radius must be positive");
  check_shape(resolution, spacing);
  SdfGrid g = sample_field(resolution, origin, spacing, [&](const Vec3& p) { return sphere_sdf(p, center, radius); });
  // The sphere must touch the box: distance from center to box <= radius.
  const Vec3 nearest = cwise_max(g.bbox_min(), cwise_min(g.bbox_max(), center));
  if (norm(nearest - center) > radius) throw InvalidArgument("sphere does not intersect the grid bounding box");
  return g;
}

SdfGrid init_torus(int resolution, Vec3 center, double major_radius, double minor_radius, Vec3 origin,
                   double spacing) {
  if (!(minor_radius > 0.0) || !(major_radius > minor_radius)) {
    throw InvalidArgument("torus radii must satisfy major > minor > 0");
  }
  check_shape(resolution, spacing);
  return sample_field(resolution, origin, spacing,
                      [&](const Vec3& p) { return torus_sdf(p, center, major_radius, minor_radius); });
}

double upsampled_spacing(double extent, int new_resolution) {
  const double cells = new_resolution - 1;
  double h = extent / cells;
  for (int attempt = 0; attempt < 64 && h * cells != extent; ++attempt) {
    h = std::nextafter(h, h * cells < extent ? std::numeric_limits<double>::infinity() : 0.0);
  }
  return h;
}

SdfGrid upsample(const SdfGrid& grid, int new_resolution) {
  if (new_resolution <= grid.resolution()) {
    throw InvalidArgument("upsample: new resolution " + std::to_string(new_resolution) + " must exceed " +
                          std::to_string(grid.resolution()));
  }
  const double h = upsampled_spacing(grid.extent(), new_resolution);
  SdfGrid out(new_resolution, grid.origin(), h);
  for (int k = 0; k < new_resolution; ++k)
    for (int j = 0; j < new_resolution; ++j)
      for (int i = 0; i < new_resolution; ++i) out.at(i, j, k) = trilinear_clamped(grid, out.vertex_position(i, j, k));
  return out;
}

double max_gradient_norm(const SdfGrid& grid) {
  const int n = grid.resolution();
  double best = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) best = std::max(best, norm(vertex_gradient(grid, i, j, k)));
  return best;
}

}  // namespace sdfdiff
