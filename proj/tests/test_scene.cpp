#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdfdiff/scene.hpp"

using namespace sdfdiff;

namespace {
constexpr double kFov = std::numbers::pi / 4.0;
}

TEST_CASE("canonical rig layout") {
  const auto rig = canonical_rig({0, 0, 0}, 0.5, 2.0, kFov, 16);
  REQUIRE(rig.size() == 26);
  CHECK(rig[0].position() == Vec3{0, 0, 2});
  for (std::size_t a = 0; a < rig.size(); ++a) {
    CHECK(norm(rig[a].position()) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(dot(rig[a].forward(), normalized(-rig[a].position())) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t b = a + 1; b < rig.size(); ++b) CHECK(norm(rig[a].position() - rig[b].position()) > 0.1);
  }
  bool saw_x = false, saw_corner = false;
  for (const Camera& c : rig) {
    if (norm(c.position() - Vec3{2, 0, 0}) < 1e-12) {
      saw_x = true;
      CHECK(norm(c.forward() - Vec3{-1, 0, 0}) < 1e-14);
      CHECK(c.up() == Vec3{0, 0, 1});
    }
    if (norm(normalized(c.position()) - normalized(Vec3{1, 1, 1})) < 1e-12) {
      saw_corner = true;
      CHECK(norm(c.forward() + normalized(Vec3{1, 1, 1})) < 1e-14);
    }
    if (std::abs(std::abs(c.forward().z) - 1.0) < 1e-12) CHECK(c.up() == Vec3{0, 1, 0});
  }
  CHECK(saw_x);
  CHECK(saw_corner);
  CHECK_THROWS_AS(canonical_rig({0, 0, 0}, 0.5, 0.8, kFov, 16), InvalidArgument);
}

TEST_CASE("generate_ray geometry") {
  const Camera cam({0, -3, 0}, {0, 0, 0}, {0, 0, 1}, kFov, 17, 17);
  const Ray center = generate_ray(cam, 8, 8);
  CHECK(norm(center.direction - Vec3{0, 1, 0}) < 1e-15);
  CHECK(center.origin == cam.position());

  const Vec3 axis = cam.forward();
  const double a00 = dot(generate_ray(cam, 0, 0).direction, axis);
  CHECK(dot(generate_ray(cam, 16, 0).direction, axis) == doctest::Approx(a00).epsilon(1e-14));
  CHECK(dot(generate_ray(cam, 0, 16).direction, axis) == doctest::Approx(a00).epsilon(1e-14));
  CHECK(dot(generate_ray(cam, 16, 16).direction, axis) == doctest::Approx(a00).epsilon(1e-14));

  // Top-left pixel looks up and to the left.
  const Vec3 d00 = generate_ray(cam, 0, 0).direction;
  CHECK(d00.z > 0.0);
  CHECK(d00.x < 0.0);

  const double angle = std::acos(dot(generate_ray(cam, 0, 8).direction, generate_ray(cam, 16, 8).direction));
  const double expected = 2.0 * std::atan(std::tan(kFov / 2.0) * 16.0 / 17.0);
  CHECK(angle == doctest::Approx(expected).epsilon(1e-12));
  CHECK(angle < kFov);
  CHECK(angle > kFov - 2.0 * kFov / 17.0);

  for (int y = 0; y < 17; ++y)
    for (int x = 0; x < 17; ++x) CHECK(std::abs(norm(generate_ray(cam, x, y).direction) - 1.0) < 1e-12);
  CHECK_THROWS_AS(generate_ray(cam, 17, 0), InvalidArgument);
  CHECK_THROWS_AS(generate_ray(cam, 0, -1), InvalidArgument);
}

TEST_CASE("camera validation") {
  CHECK_THROWS_AS(Camera({0, 0, 0}, {0, 0, 0}, {0, 0, 1}, kFov, 8, 8), InvalidArgument);
  CHECK_THROWS_AS(Camera({0, 0, 2}, {0, 0, 0}, {0, 0, 1}, kFov, 8, 8), InvalidArgument);
  CHECK_THROWS_AS(Camera({0, -2, 0}, {0, 0, 0}, {0, 0, 1}, 0.0, 8, 8), InvalidArgument);
  CHECK_THROWS_AS(Camera({0, -2, 0}, {0, 0, 0}, {0, 0, 1}, kFov, 0, 8), InvalidArgument);
  const Camera c({0, -2, 0}, {0, 0, 0}, {0, 0, 1}, kFov, 8, 8);
  const Camera r = c.with_resolution(32, 32);
  CHECK(r.width() == 32);
  CHECK(r.position() == c.position());
}

TEST_CASE("headlight follows the view direction") {
  const Camera c({1, 1, 1}, {0, 0, 0}, {0, 0, 1}, kFov, 8, 8);
  const Light l = headlight(c);
  CHECK(norm(l.direction - c.forward()) < 1e-15);
  CHECK(l.ambient == 0.1);
  Light bad = l;
  bad.ambient = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("image resolution rule") {
  const double z = far_corner_depth(0.5, 2.0);
  CHECK(z == doctest::Approx(std::sqrt(4.0 + 2.0 + 0.75)));

  // h/z = tan(fov/2) gives R = 2 before clamping.
  CHECK(image_res_unclamped(z * std::tan(kFov / 2.0), z, kFov) == 2);

  // Largest R with diameter <= 2 px.
  for (double h : {1.0 / 7, 1.0 / 15, 1.0 / 31, 1.0 / 63, 1.0 / 127, 0.0123}) {
    const int r = image_res_unclamped(h, z, kFov);
    CHECK(projected_diameter_px(h, z, kFov, r) <= 2.0);
    CHECK(projected_diameter_px(h, z, kFov, r + 1) > 2.0);
    const int r2 = image_res_unclamped(h / 2.0, z, kFov);
    CHECK(std::abs(r2 - 2 * r) <= 1);
  }

  const Vec3 o{-0.5, -0.5, -0.5};
  int prev = 0;
  for (int n : {8, 16, 32, 64, 128}) {
    const int r = image_res_for(SdfGrid(n, o, 1.0 / (n - 1)), 2.0, kFov);
    CHECK(r >= prev);
    CHECK(r >= kMinImageRes);
    prev = r;
  }
  CHECK(image_res_for(SdfGrid(8, o, 1.0 / 7), 2.0, kFov) == 16);
  CHECK(image_res_for(SdfGrid(16, o, 1.0 / 15), 2.0, kFov) == 32);
  CHECK(image_res_for(SdfGrid(32, o, 1.0 / 31), 2.0, kFov) == 66);
  CHECK(image_res_for(SdfGrid(64, o, 1.0 / 63), 2.0, kFov) == 135);
  CHECK(image_res_for(SdfGrid(512, o, 1.0 / 511), 2.0, kFov, 512) == 512);
}
