#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/grid_io.hpp"

using namespace sdfdiff;

namespace {

const Vec3 kOrigin{-0.5, -0.5, -0.5};

SdfGrid random_grid(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SdfGrid g(n, kOrigin, 1.0 / (n - 1));
  for (double& v : g.values()) v = u(rng);
  return g;
}

// Nested linear interpolation, x then y then z: independent of the weight table.
double nested_lerp(const SdfGrid& g, const Vec3& p) {
  const double h = g.spacing();
  const double fx = (p.x - g.origin().x) / h, fy = (p.y - g.origin().y) / h, fz = (p.z - g.origin().z) / h;
  const int i = std::min(static_cast<int>(fx), g.resolution() - 2);
  const int j = std::min(static_cast<int>(fy), g.resolution() - 2);
  const int k = std::min(static_cast<int>(fz), g.resolution() - 2);
  const double tx = fx - i, ty = fy - j, tz = fz - k;
  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
  auto row = [&](int jj, int kk) { return lerp(g.at(i, jj, kk), g.at(i + 1, jj, kk), tx); };
  auto plane = [&](int kk) { return lerp(row(j, kk), row(j + 1, kk), ty); };
  return lerp(plane(k), plane(k + 1), tz);
}

}  // namespace

TEST_CASE("init_sphere matches the signed distance definition") {
  // 11^3 grid over [-0.5,0.5]: spacing 0.1, vertex 5 at the origin.
  const SdfGrid g = init_sphere(11, {0, 0, 0}, 0.2, kOrigin, 0.1);
  CHECK(g.at(5, 5, 5) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(std::abs(g.at(7, 5, 5)) < 1e-15);   // x = 0.2
  CHECK(g.at(9, 5, 5) == doctest::Approx(0.2));  // c + (2r,0,0)
  CHECK_THROWS_AS(init_sphere(11, {0, 0, 0}, 0.0, kOrigin, 0.1), InvalidArgument);
  CHECK_THROWS_AS(init_sphere(1, {0, 0, 0}, 0.2, kOrigin, 0.1), InvalidArgument);
  CHECK_THROWS_AS(init_sphere(11, {3, 0, 0}, 0.2, kOrigin, 0.1), InvalidArgument);
}

TEST_CASE("init_torus examples") {
  const SdfGrid g = init_torus(11, {0, 0, 0}, 0.3, 0.1, kOrigin, 0.1);
  CHECK(g.at(8, 5, 5) == doctest::Approx(-0.1));  // on the ring circle
  CHECK(std::abs(g.at(9, 5, 5)) < 1e-12);         // outer equator, R + r = 0.4
  CHECK(g.at(5, 5, 5) == doctest::Approx(0.2));   // center: R - r
  CHECK_THROWS_AS(init_torus(11, {0, 0, 0}, 0.1, 0.3, kOrigin, 0.1), InvalidArgument);
  CHECK_THROWS_AS(init_torus(11, {0, 0, 0}, 0.3, 0.0, kOrigin, 0.1), InvalidArgument);
}

TEST_CASE("trilinear is exact at vertices and linear on edges") {
  std::mt19937_64 rng(7);
  const SdfGrid g = random_grid(6, rng);
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) CHECK(trilinear(g, g.vertex_position(i, j, k)) == doctest::Approx(g.at(i, j, k)).epsilon(1e-14));
  const Vec3 mid = 0.5 * (g.vertex_position(2, 3, 1) + g.vertex_position(3, 3, 1));
  CHECK(trilinear(g, mid) == doctest::Approx(0.5 * (g.at(2, 3, 1) + g.at(3, 3, 1))).epsilon(1e-14));
}

TEST_CASE("trilinear agrees with nested interpolation at random points") {
  std::mt19937_64 rng(11);
  const SdfGrid g = random_grid(9, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    CHECK(trilinear(g, p) == doctest::Approx(nested_lerp(g, p)).epsilon(1e-13));
  }
  CHECK(trilinear(g, g.bbox_max()) == doctest::Approx(g.at(8, 8, 8)));
  CHECK_THROWS_AS(trilinear(g, {0.6, 0.0, 0.0}), OutOfDomain);
}

TEST_CASE("trilinear is affine along axis-parallel segments inside a cell") {
  std::mt19937_64 rng(3);
  const SdfGrid g = random_grid(5, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index3 c{1, 2, 0};
    const Vec3 base = g.vertex_position(c.i, c.j, c.k) + g.spacing() * Vec3{u(rng), u(rng), u(rng)};
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 a = base, b = base;
      a[axis] = g.vertex_position(c.i, c.j, c.k)[axis];
      b[axis] = a[axis] + g.spacing();
      const double t = u(rng);
      const Vec3 p = a + t * (b - a);
      const double fa = trilinear(g, a);
      const double fb = trilinear(g, b), fp = trilinear(g, p);
      CHECK(fp == doctest::Approx(fa + t * (fb - fa)).epsilon(1e-12));
    }
  }
}

TEST_CASE("trilinear is continuous across shared cell faces") {
  std::mt19937_64 rng(5);
  const SdfGrid g = random_grid(6, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    // Point on the x = const face between cells (1,2,3) and (2,2,3).
    const Vec3 p = g.vertex_position(2, 2, 3) + g.spacing() * Vec3{0.0, u(rng), u(rng)};
    auto eval = [&](Index3 c) {
      const auto w = locate_in_cell(g, p, c).weights;
      const auto d = cell_corner_values(g, c);
      double f = 0;
      for (int m = 0; m < 8; ++m) f += w[m] * d[m];
      return f;
    };
    const double left = eval({1, 2, 3}), right = eval({2, 2, 3});
    CHECK(std::abs(left - right) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(left)));
  }
}

TEST_CASE("vertex_gradient on linear, constant and sphere fields") {
  const SdfGrid lin = sample_field(8, kOrigin, 1.0 / 7, [](const Vec3& p) { return p.x; });
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const Vec3 g = vertex_gradient(lin, i, j, k);
        CHECK(g.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(g.y) < 1e-12);
        CHECK(std::abs(g.z) < 1e-12);
      }
  const SdfGrid flat(6, kOrigin, 0.2);
  CHECK(vertex_gradient(flat, 0, 3, 5) == Vec3{0, 0, 0});
  CHECK_THROWS_AS(vertex_gradient(flat, 6, 0, 0), InvalidArgument);

  // Second-order convergence toward the analytic normal away from the center.
  auto max_err = [](int n) {
    const SdfGrid s = init_sphere(n, {0, 0, 0}, 0.3, kOrigin, 1.0 / (n - 1));
    double err = 0;
    for (int k = 1; k < n - 1; ++k)
      for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
          const Vec3 x = s.vertex_position(i, j, k);
          if (norm(x) < 0.2) continue;
          err = std::max(err, norm(vertex_gradient(s, i, j, k) - normalized(x)));
        }
    return err;
  };
  const double e1 = max_err(21), e2 = max_err(41);
  CHECK(e2 < e1 / 3.0);
}

TEST_CASE("vertex_gradient is exact on affine fields at interior vertices") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 a{u(rng), u(rng), u(rng)};
    const double e = u(rng);
    const SdfGrid g = sample_field(7, kOrigin, 1.0 / 6, [&](const Vec3& p) { return dot(a, p) + e; });
    for (int k = 1; k < 6; ++k)
      for (int j = 1; j < 6; ++j)
        for (int i = 1; i < 6; ++i) CHECK(norm(vertex_gradient(g, i, j, k) - a) < 1e-12);
  }
}

TEST_CASE("vertex_laplacian examples and quadratic exactness") {
  const SdfGrid flat(5, kOrigin, 0.25);
  CHECK(vertex_laplacian(flat, 2, 2, 2) == 0.0);
  const SdfGrid x2 = sample_field(7, kOrigin, 1.0 / 6, [](const Vec3& p) { return p.x * p.x; });
  CHECK(vertex_laplacian(x2, 3, 2, 4) == doctest::Approx(2.0).epsilon(1e-10));
  const SdfGrid r2 = sample_field(7, kOrigin, 1.0 / 6, [](const Vec3& p) { return dot(p, p); });
  CHECK(vertex_laplacian(r2, 1, 5, 3) == doctest::Approx(6.0).epsilon(1e-10));
  CHECK_THROWS_AS(vertex_laplacian(r2, 0, 3, 3), InvalidArgument);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    double c[10];
    for (double& v : c) v = u(rng);
    auto f = [&](const Vec3& p) {
      return c[0] * p.x * p.x + c[1] * p.y * p.y + c[2] * p.z * p.z + c[3] * p.x * p.y + c[4] * p.y * p.z +
             c[5] * p.x * p.z + c[6] * p.x + c[7] * p.y + c[8] * p.z + c[9];
    };
    const double lap = 2.0 * (c[0] + c[1] + c[2]);
    const SdfGrid g = sample_field(6, kOrigin, 0.2, f);
    for (int k = 1; k < 5; ++k)
      for (int j = 1; j < 5; ++j)
        for (int i = 1; i < 5; ++i) CHECK(vertex_laplacian(g, i, j, k) == doctest::Approx(lap).epsilon(1e-8));
  }
}

TEST_CASE("upsample reproduces constant and affine fields") {
  SdfGrid c(5, kOrigin, 0.25);
  for (double& v : c.values()) v = 0.7;
  const SdfGrid cu = upsample(c, 9);
  for (double v : cu.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));

  auto affine = [](const Vec3& p) { return 0.3 * p.x - 1.2 * p.y + 0.5 * p.z + 0.25; };
  const SdfGrid a = sample_field(8, kOrigin, 1.0 / 7, affine);
  const SdfGrid au = upsample(a, 20);
  CHECK(au.bbox_min() == a.bbox_min());
  CHECK(au.bbox_max() == a.bbox_max());
  for (int k = 0; k < 20; ++k)
    for (int j = 0; j < 20; ++j)
      for (int i = 0; i < 20; ++i) CHECK(au.at(i, j, k) == doctest::Approx(affine(au.vertex_position(i, j, k))).epsilon(1e-13));

  // Two-step and direct resampling agree on affine fields.
  const SdfGrid two = upsample(upsample(a, 11), 20);
  for (std::size_t q = 0; q < two.size(); ++q) CHECK(two.values()[q] == doctest::Approx(au.values()[q]).epsilon(1e-13));
  CHECK_THROWS_AS(upsample(a, 8), InvalidArgument);
}

TEST_CASE("upsampled sphere stays within the coarse interpolation error") {
  const SdfGrid coarse = init_sphere(8, {0, 0, 0}, 0.3, kOrigin, 1.0 / 7);
  const SdfGrid fine = upsample(coarse, 16);
  // Bound: the largest deviation of the coarse trilinear field from the
  // analytic SDF, measured on a dense probe lattice.
  double coarse_err = 0.0;
  for (int k = 0; k <= 70; ++k)
    for (int j = 0; j <= 70; ++j)
      for (int i = 0; i <= 70; ++i) {
        const Vec3 p = kOrigin + Vec3{i / 70.0, j / 70.0, k / 70.0};
        coarse_err = std::max(coarse_err, std::abs(trilinear(coarse, p) - sphere_sdf(p, {0, 0, 0}, 0.3)));
      }
  double fine_err = 0.0;
  for (int k = 0; k < 16; ++k)
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) {
        fine_err = std::max(fine_err, std::abs(fine.at(i, j, k) - sphere_sdf(fine.vertex_position(i, j, k), {0, 0, 0}, 0.3)));
      }
  CHECK(fine_err > 0.0);
  CHECK(fine_err <= coarse_err + 1e-12);
}

TEST_CASE("grid container layout and round trip") {
  std::mt19937_64 rng(29);
  const SdfGrid g = random_grid(4, rng);
  std::stringstream buf;
  write_grid(buf, g);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 32 + 64 * 8);
  CHECK(bytes.substr(0, 4) == "SDFG");
  std::uint32_t version = 0, res = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&res, bytes.data() + 8, 4);
  CHECK(version == 1);
  CHECK(res == 4);
  double first = 0, spacing = 0;
  std::memcpy(&spacing, bytes.data() + 36, 8);
  std::memcpy(&first, bytes.data() + 44 + 8, 8);  // value (1,0,0): x-fastest
  CHECK(spacing == g.spacing());
  CHECK(first == g.at(1, 0, 0));

  const SdfGrid back = read_grid(buf);
  CHECK(back.resolution() == g.resolution());
  CHECK(back.origin() == g.origin());
  for (std::size_t q = 0; q < g.size(); ++q) CHECK(back.values()[q] == g.values()[q]);

  std::stringstream text;
  write_grid_text(text, g);
  const SdfGrid tb = read_grid_text(text);
  for (std::size_t q = 0; q < g.size(); ++q) CHECK(tb.values()[q] == g.values()[q]);
  CHECK(tb.spacing() == g.spacing());
}

TEST_CASE("grid container rejects corrupt input") {
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_grid(bad), IoError);
  std::mt19937_64 rng(31);
  std::stringstream buf;
  write_grid(buf, random_grid(3, rng));
  std::stringstream truncated(buf.str().substr(0, 60));
  CHECK_THROWS_AS(read_grid(truncated), IoError);
  CHECK_THROWS_AS(load_grid("/nonexistent/grid.sdfg"), IoError);
}

TEST_CASE("gradient buffer accumulation") {
  GradientBuffer a(3), b(3);
  a[4] = 1.5;
  b[4] = 0.5;
  b[0] = -1.0;
  a += b;
  CHECK(a[4] == 2.0);
  CHECK(a[0] == -1.0);
  a.add_scaled(b, 2.0);
  CHECK(a[4] == 3.0);
  CHECK_THROWS_AS(a += GradientBuffer(4), InvalidArgument);
}
