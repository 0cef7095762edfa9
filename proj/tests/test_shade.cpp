#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sdfdiff/gradcheck.hpp"
#include "sdfdiff/parallel.hpp"
#include "sdfdiff/shade.hpp"
#include "support.hpp"

using namespace sdfdiff;
using namespace sdfdiff::testing;

namespace {

constexpr double kFov = std::numbers::pi / 4.0;

SdfGrid plane_grid(int n, const Vec3& normal, double offset) {
  return sample_field(n, kUnitOrigin, 1.0 / (n - 1), [&](const Vec3& p) { return dot(normal, p) - offset; });
}

HitRecord trace(const SdfGrid& g, const Ray& ray) { return sphere_trace(g, ray, TraceParams::for_grid(g)); }

}  // namespace

TEST_CASE("intersection point on planes") {
  const SdfGrid g = plane_grid(16, {1, 0, 0}, 0.1);
  const Vec3 s{0.05, 0.02, -0.1};
  CHECK(intersection_point({0.1, 0.2, 0.3}, {1, 0, 0}, g).x == doctest::Approx(0.1).epsilon(1e-14));

  // Perpendicular ray: exact.
  const Ray ray{{2.0, 0.1, 0.05}, {-1, 0, 0}};
  const HitRecord hit = trace(g, ray);
  REQUIRE(hit.hit);
  CHECK(std::abs(intersection_point(hit.s, ray.direction, g).x - 0.1) < 1e-14);
  CHECK(norm(intersection_point(s, {-1, 0, 0}, g) - Vec3{0.1, 0.02, -0.1}) < 1e-14);

  // 45 degree plane: falls short of the true hit, never past it.
  const Vec3 n = normalized(Vec3{1, 1, 0});
  const SdfGrid tilted = plane_grid(16, n, 0.0);
  for (double y : {-0.2, -0.05, 0.0, 0.13}) {
    const Ray r{{2.0, y, 0.0}, {-1, 0, 0}};
    const HitRecord th = trace(tilted, r);
    REQUIRE(th.hit);
    const Vec3 p = intersection_point(th.s, r.direction, tilted);
    CHECK(p.x >= -y - 1e-12);
    CHECK(dot(n, p) >= -1e-12);
    CHECK(dot(n, p) < 1e-3);
  }
}

TEST_CASE("surface normals") {
  const SdfGrid g = plane_grid(12, {1, 0, 0}, 0.05);
  for (const Vec3& p : {Vec3{0.05, 0.0, 0.0}, Vec3{0.05, 0.45, -0.49}, Vec3{0.05, -0.5, 0.5}}) {
    CHECK(norm(surface_normal(g, p) - Vec3{1, 0, 0}) < 1e-12);
  }

  auto worst_angle = [](int n) {
    const SdfGrid s = unit_sphere_grid(n);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    for (int q = 0; q < 500; ++q) {
      const Vec3 dir = normalized(Vec3{gauss(rng), gauss(rng), gauss(rng)});
      worst = std::max(worst, std::acos(std::min(1.0, dot(surface_normal(s, 0.3 * dir), dir))));
    }
    return worst;
  };
  const double a32 = worst_angle(32), a64 = worst_angle(64);
  CHECK(a32 < 0.05);
  CHECK(a64 < a32 / 2.5);

  SdfGrid flat(6, kUnitOrigin, 0.2);
  CHECK_THROWS_AS(surface_normal(flat, {0, 0, 0}), DegenerateNormal);
  CHECK_THROWS_AS(surface_normal(g, {0.7, 0, 0}), OutOfDomain);
}

TEST_CASE("shading extremes") {
  const SdfGrid g = plane_grid(16, {1, 0, 0}, 0.1);
  const Ray ray{{2.0, 0.03, -0.07}, {-1, 0, 0}};
  const HitRecord hit = trace(g, ray);
  REQUIRE(hit.hit);

  Light facing;
  facing.direction = {-1, 0, 0};
  CHECK(shade_pixel(hit, g, facing, ray).pixel_value == doctest::Approx(1.1).epsilon(1e-14));

  Light side;
  side.direction = {0, 1, 0};
  const PixelTape t = shade_pixel(hit, g, side, ray);
  CHECK(t.pixel_value == doctest::Approx(0.1).epsilon(1e-14));
  for (int q = 0; q < t.count; ++q) CHECK(t.sample_grads[q] == 0.0);

  SdfGrid inside(8, kUnitOrigin, 1.0 / 7);
  for (double& v : inside.values()) v = -0.2;
  const Ray r2{{0.01, 0.02, 2.0}, {0, 0, -1}};
  const HitRecord h2 = trace(inside, r2);
  REQUIRE(h2.hit);
  const PixelTape degenerate = shade_pixel(h2, inside, headlight(Camera({0, 0, 2}, {0, 0, 0}, {0, 1, 0}, kFov, 8, 8)), r2);
  CHECK(degenerate.pixel_value == 0.1);
  for (int q = 0; q < degenerate.count; ++q) CHECK(degenerate.sample_grads[q] == 0.0);

  HitRecord miss;
  CHECK_THROWS_AS(shade_pixel(miss, g, facing, ray), InvalidArgument);
}

TEST_CASE("tapes are local, distinct, finite and bounded") {
  const SdfGrid g = unit_torus_grid(24);
  std::mt19937_64 rng(9);
  int hits = 0;
  for (int r = 0; r < 2000; ++r) {
    const Ray ray = random_ray(rng);
    const HitRecord hit = trace(g, ray);
    if (!hit.hit) continue;
    ++hits;
    Light light;
    light.direction = ray.direction;
    const PixelTape t = shade_pixel(hit, g, light, ray);
    CHECK(t.pixel_value >= 0.0);
    CHECK(t.pixel_value <= 1.1 + 1e-12);
    CHECK(t.pixel_value == doctest::Approx(shade_value(hit, g, light, ray)).epsilon(1e-14));
    std::set<std::size_t> seen;
    for (int q = 0; q < t.count; ++q) {
      const Index3 v = g.unflatten(t.sample_indices[q]);
      CHECK(v.i >= hit.cell.i - 1);
      CHECK(v.i <= hit.cell.i + 2);
      CHECK(v.j >= hit.cell.j - 1);
      CHECK(v.j <= hit.cell.j + 2);
      CHECK(v.k >= hit.cell.k - 1);
      CHECK(v.k <= hit.cell.k + 2);
      CHECK(std::isfinite(t.sample_grads[q]));
      CHECK(seen.insert(t.sample_indices[q]).second);
    }
  }
  CHECK(hits > 200);
}

TEST_CASE("perturbing a sample outside the block leaves the pixel unchanged") {
  SdfGrid g = unit_sphere_grid(24);
  const Ray ray{{0.03, -0.02, 2.0}, {0, 0, -1}};
  const HitRecord hit = trace(g, ray);
  REQUIRE(hit.hit);
  Light light;
  const double base = shade_value(hit, g, light, ray);
  g.at(hit.cell.i + 3, hit.cell.j, hit.cell.k) += 0.01;
  g.at(hit.cell.i, hit.cell.j - 2, hit.cell.k) += 0.01;
  CHECK(shade_value(hit, g, light, ray) == base);
}

TEST_CASE("analytic gradients agree with finite differences") {
  GradcheckConfig cfg;
  cfg.n_pixels = 150;
  cfg.grid_resolution = 16;
  cfg.image_resolution = 32;
  const GradcheckReport report = run_gradcheck(cfg);
  for (const auto& f : report.families) {
    INFO(f.name);
    CHECK(f.pass);
    CHECK(f.checked > 0);
  }
  CHECK(report.pixels >= 150);
  CHECK_FALSE(run_gradcheck(cfg, GradcheckFault::kSignFlip).pass);

  cfg.n_pixels = 0;
  const GradcheckReport empty = run_gradcheck(cfg);
  CHECK(empty.vacuous);
  CHECK(empty.pass);
}

TEST_CASE("render of an empty scene is black") {
  SdfGrid g(8, kUnitOrigin, 1.0 / 7);
  for (double& v : g.values()) v = 1.0;
  const Camera cam({0, -2, 0}, {0, 0, 0}, {0, 0, 1}, kFov, 16, 16);
  const RenderedView rv = render(g, cam, headlight(cam), true);
  for (double p : rv.image.pixels) CHECK(p == 0.0);
  CHECK(rv.tapes.empty());
}

TEST_CASE("sphere renders as a disk of the projected radius") {
  const SdfGrid g = unit_sphere_grid(48);
  const int res = 64;
  const double expected = std::tan(std::asin(0.3 / 2.0)) / std::tan(kFov / 2.0) * (res / 2.0);
  for (const Camera& cam : canonical_rig({0, 0, 0}, 0.5, 2.0, kFov, res)) {
    const RenderedView rv = render(g, cam, headlight(cam), false);
    int count = 0;
    double far = 0.0;
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        if (rv.image.at(x, y) == 0.0) continue;
        ++count;
        far = std::max(far, std::hypot(x + 0.5 - res / 2.0, y + 0.5 - res / 2.0));
      }
    CHECK(std::abs(std::sqrt(count / std::numbers::pi) - expected) <= 1.5);
    CHECK(far <= expected + 1.5);
  }
}

TEST_CASE("render is deterministic across thread counts") {
  const SdfGrid g = unit_torus_grid(24);
  const Camera cam = canonical_rig({0, 0, 0}, 0.5, 2.0, kFov, 48)[20];
  const int saved = thread_count();
  set_thread_count(1);
  const RenderedView a = render(g, cam, headlight(cam), true);
  set_thread_count(4);
  const RenderedView b = render(g, cam, headlight(cam), true);
  set_thread_count(saved);
  CHECK(a.image.pixels == b.image.pixels);
  REQUIRE(a.tapes.size() == b.tapes.size());
  CHECK(a.tape_pixel == b.tape_pixel);
  for (std::size_t q = 0; q < a.tapes.size(); ++q) {
    CHECK(a.tapes[q].count == b.tapes[q].count);
    CHECK(a.tapes[q].sample_grads == b.tapes[q].sample_grads);
  }
}
