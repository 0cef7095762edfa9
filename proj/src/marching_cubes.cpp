#include <algorithm>
#include <map>
#include <unordered_map>

#include "sdfdiff/eval.hpp"

namespace sdfdiff {

namespace {

#include "mc_tables.inc"

// Corner offsets in the tables' corner numbering.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

double TriangleMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) {
    a += 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
  }
  return a;
}

namespace {
std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use(const TriangleMesh& m) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  return edges;
}
}  // namespace

long TriangleMesh::euler_characteristic() const {
  const auto edges = edge_use(*this);
  std::vector<bool> used(vertices.size(), false);
  for (const auto& t : triangles)
    for (auto v : t) used[v] = true;
  const long v = std::count(used.begin(), used.end(), true);
  return v - static_cast<long>(edges.size()) + static_cast<long>(triangles.size());
}

bool TriangleMesh::is_closed_manifold() const {
  const auto edges = edge_use(*this);
  return std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second == 2; });
}

TriangleMesh marching_cubes(const SdfGrid& grid, double iso) {
  TriangleMesh mesh;
  const int n = grid.resolution();
  // Vertex ids keyed by (lattice vertex, axis) of the crossed lattice edge.
  std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

  auto vertex_on_edge = [&](Index3 a, Index3 b) -> std::uint32_t {
    if (a.i + a.j + a.k > b.i + b.j + b.k) std::swap(a, b);
    const int axis = b.i != a.i ? 0 : (b.j != a.j ? 1 : 2);
    const std::uint64_t key = static_cast<std::uint64_t>(grid.index(a.i, a.j, a.k)) * 3 + axis;
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double va = grid.at(a.i, a.j, a.k), vb = grid.at(b.i, b.j, b.k);
    const double t = (vb == va) ? 0.5 : std::clamp((iso - va) / (vb - va), 0.0, 1.0);
    const Vec3 pa = grid.vertex_position(a.i, a.j, a.k), pb = grid.vertex_position(b.i, b.j, b.k);
    mesh.vertices.push_back(pa + t * (pb - pa));
    const auto id = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
    edge_vertex.emplace(key, id);
    return id;
  };

  for (int k = 0; k < n - 1; ++k)
    for (int j = 0; j < n - 1; ++j)
      for (int i = 0; i < n - 1; ++i) {
        int cube = 0;
        Index3 corner[8];
        for (int c = 0; c < 8; ++c) {
          corner[c] = {i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]};
          if (grid.at(corner[c].i, corner[c].j, corner[c].k) < iso) cube |= 1 << c;
        }
        if (kEdgeTable[cube] == 0) continue;
        std::uint32_t ids[12];
        for (int e = 0; e < 12; ++e) {
          if (kEdgeTable[cube] & (1 << e)) ids[e] = vertex_on_edge(corner[kEdgeCorners[e][0]], corner[kEdgeCorners[e][1]]);
        }
        for (int t = 0; kTriTable[cube][t] != -1; t += 3) {
          // Table winding faces toward lower values; reverse it.
          const std::array<std::uint32_t, 3> tri{ids[kTriTable[cube][t]], ids[kTriTable[cube][t + 2]],
                                                 ids[kTriTable[cube][t + 1]]};
          const Vec3& a = mesh.vertices[tri[0]];
          if (0.5 * norm(cross(mesh.vertices[tri[1]] - a, mesh.vertices[tri[2]] - a)) <= 1e-12) continue;
          mesh.triangles.push_back(tri);
        }
      }
  return mesh;
}

}  // namespace sdfdiff
