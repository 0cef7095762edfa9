#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sdfdiff/grid.hpp"

namespace sdfdiff {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  double area() const;
  /// V - E + F over the welded mesh.
  long euler_characteristic() const;
  /// Every undirected edge shared by exactly two triangles.
  bool is_closed_manifold() const;
};

/// Iso-surface via the standard 256-case tables. Edge vertices are linear
/// interpolations of the endpoint values and are shared between neighbouring
/// cells; faces are wound so their normals point toward increasing values.
/// Triangles with area <= 1e-12 are dropped.
TriangleMesh marching_cubes(const SdfGrid& grid, double iso = 0.0);

/// Exact distance from a point to a triangle.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Nearest-triangle queries over a static mesh.
class MeshDistance {
 public:
  explicit MeshDistance(const TriangleMesh& mesh);
  double distance(const Vec3& p) const;

 private:
  struct Node {
    Vec3 lo, hi;
    std::uint32_t first = 0;  // leaf: first triangle slot; inner: right child
    std::uint32_t count = 0;  // 0 for inner nodes
  };
  std::uint32_t build(std::uint32_t begin, std::uint32_t end);

  const TriangleMesh& mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Points distributed uniformly by area; deterministic for a given seed.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int samples, std::uint64_t seed);

/// max over samples of A of the distance to B.
double directed_hausdorff(const std::vector<Vec3>& samples_a, const MeshDistance& b);

inline constexpr int kMinHausdorffSamples = 10000;
inline constexpr int kDefaultHausdorffSamples = 100000;

/// Sampled symmetric Hausdorff distance divided by `box_edge`. Both meshes are
/// sampled with the same seed, so swapping the arguments gives the same value.
double symmetric_hausdorff(const TriangleMesh& a, const TriangleMesh& b, int samples, std::uint64_t seed,
                           double box_edge);

void write_obj(std::ostream& out, const TriangleMesh& mesh);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
/// Reads "v" and "f" records; polygons are fan-triangulated.
TriangleMesh read_obj(std::istream& in, const std::string& name = "<stream>");
TriangleMesh load_obj(const std::filesystem::path& path);

}  // namespace sdfdiff
