#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sdfdiff/errors.hpp"
#include "sdfdiff/eval.hpp"

namespace sdfdiff {

// Closest point on triangle (Ericson, Real-Time Collision Detection, 5.1.5).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm(p - a);
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm(p - b);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return norm(p - (a + (d1 / (d1 - d3)) * ab));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm(p - c);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return norm(p - (a + (d2 / (d2 - d6)) * ac));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return norm(p - (b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return norm(p - (a + ab * (vb * denom) + ac * (vc * denom)));
}

namespace {

constexpr std::uint32_t kLeafSize = 4;

double box_distance2(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double e = std::max({lo[a] - p[a], 0.0, p[a] - hi[a]});
    d2 += e * e;
  }
  return d2;
}

}  // namespace

MeshDistance::MeshDistance(const TriangleMesh& mesh) : mesh_(mesh) {
  if (mesh.empty()) throw InvalidArgument("distance query against an empty mesh");
  order_.resize(mesh.triangles.size());
  for (std::uint32_t t = 0; t < order_.size(); ++t) order_[t] = t;
  nodes_.reserve(2 * order_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(order_.size()));
}

std::uint32_t MeshDistance::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = -lo;
  for (std::uint32_t q = begin; q < end; ++q)
    for (auto v : mesh_.triangles[order_[q]]) {
      lo = cwise_min(lo, mesh_.vertices[v]);
      hi = cwise_max(hi, mesh_.vertices[v]);
    }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  if (end - begin <= kLeafSize) {
    nodes_[id].first = begin;
    nodes_[id].count = end - begin;
    return id;
  }
  const Vec3 ext = hi - lo;
  const int axis = ext.x > ext.y ? (ext.x > ext.z ? 0 : 2) : (ext.y > ext.z ? 1 : 2);
  auto centroid = [&](std::uint32_t t) {
    const auto& tri = mesh_.triangles[t];
    return mesh_.vertices[tri[0]][axis] + mesh_.vertices[tri[1]][axis] + mesh_.vertices[tri[2]][axis];
  };
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return centroid(a) < centroid(b); });
  build(begin, mid);  // left child is id + 1
  const std::uint32_t right = build(mid, end);
  nodes_[id].first = right;
  nodes_[id].count = 0;
  return id;
}

double MeshDistance::distance(const Vec3& p) const {
  double best2 = std::numeric_limits<double>::infinity();
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance2(p, node.lo, node.hi) >= best2) continue;
    if (node.count > 0) {
      for (std::uint32_t q = node.first; q < node.first + node.count; ++q) {
        const auto& t = mesh_.triangles[order_[q]];
        const double d = point_triangle_distance(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]);
        best2 = std::min(best2, d * d);
      }
      continue;
    }
    const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
    const std::uint32_t left = self + 1, right = node.first;
    const double dl = box_distance2(p, nodes_[left].lo, nodes_[left].hi);
    const double dr = box_distance2(p, nodes_[right].lo, nodes_[right].hi);
    // Visit the nearer child first.
    if (dl < dr) {
      stack[top++] = right;
      stack[top++] = left;
    } else {
      stack[top++] = left;
      stack[top++] = right;
    }
  }
  return std::sqrt(best2);
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int samples, std::uint64_t seed) {
  if (mesh.empty()) throw InvalidArgument("cannot sample an empty mesh");
  std::vector<double> cdf(mesh.triangles.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    acc += 0.5 * norm(cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]], mesh.vertices[tri[2]] - mesh.vertices[tri[0]]));
    cdf[t] = acc;
  }
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const double pick = uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), pick);
    if (it == cdf.end()) --it;
    const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cdf.begin())];
    const double r1 = std::sqrt(uniform()), r2 = uniform();
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    out.push_back((1.0 - r1) * a + (r1 * (1.0 - r2)) * b + (r1 * r2) * c);
  }
  return out;
}

double directed_hausdorff(const std::vector<Vec3>& samples_a, const MeshDistance& b) {
  double worst = 0.0;
  for (const Vec3& p : samples_a) worst = std::max(worst, b.distance(p));
  return worst;
}

double symmetric_hausdorff(const TriangleMesh& a, const TriangleMesh& b, int samples, std::uint64_t seed,
                           double box_edge) {
  if (a.empty() || b.empty()) throw InvalidArgument("symmetric_hausdorff: empty mesh");
  if (samples < kMinHausdorffSamples) {
    throw InvalidArgument("symmetric_hausdorff: at least " + std::to_string(kMinHausdorffSamples) + " samples required");
  }
  if (!(box_edge > 0.0)) throw InvalidArgument("symmetric_hausdorff: box edge must be positive");
  const MeshDistance da(a), db(b);
  const double ab = directed_hausdorff(sample_surface(a, samples, seed), db);
  const double ba = directed_hausdorff(sample_surface(b, samples, seed), da);
  return std::max(ab, ba) / box_edge;
}

}  // namespace sdfdiff
