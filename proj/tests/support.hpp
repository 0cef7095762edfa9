#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/scene.hpp"
#include "sdfdiff/tracer.hpp"

namespace sdfdiff::testing {

inline const Vec3 kUnitOrigin{-0.5, -0.5, -0.5};

inline SdfGrid unit_sphere_grid(int n, double radius = 0.3) {
  return init_sphere(n, {0, 0, 0}, radius, kUnitOrigin, 1.0 / (n - 1));
}

inline SdfGrid unit_torus_grid(int n, double major = 0.3, double minor = 0.12) {
  return init_torus(n, {0, 0, 0}, major, minor, kUnitOrigin, 1.0 / (n - 1));
}

// Ray from a random point on a sphere of radius 1.5 toward a random point of
// the central region of the box.
inline Ray random_ray(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const Vec3 origin = 1.5 * normalized(Vec3{gauss(rng), gauss(rng), gauss(rng)});
  const Vec3 aim{u(rng), u(rng), u(rng)};
  return {origin, normalized(aim - origin)};
}

// Smallest analytic SDF value along the box-clipped part of the ray, sampled
// densely and refined by golden-section search around the best sample.
inline double min_field_along(const SdfGrid& grid, const Ray& ray, const std::function<double(const Vec3&)>& sdf) {
  const auto span = clip_to_box(grid, ray);
  if (!span) return std::numeric_limits<double>::infinity();
  const auto [t0, t1] = *span;
  const int samples = 2000;
  const double dt = (t1 - t0) / samples;
  int best = 0;
  double best_f = sdf(ray.at(t0));
  for (int q = 1; q <= samples; ++q) {
    const double f = sdf(ray.at(t0 + q * dt));
    if (f < best_f) best_f = f, best = q;
  }
  double a = t0 + std::max(0, best - 1) * dt, b = t0 + std::min(samples, best + 1) * dt;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (sdf(ray.at(c)) < sdf(ray.at(d))) {
      b = d;
    } else {
      a = c;
    }
  }
  return std::min(best_f, sdf(ray.at(0.5 * (a + b))));
}

struct AgreementStats {
  int rays = 0;
  int excluded = 0;
  int agree = 0;
  int hits_compared = 0;
  double max_dt = 0.0;
  double agreement() const { return rays - excluded > 0 ? static_cast<double>(agree) / (rays - excluded) : 1.0; }
};

// Compares sphere_trace with march_oracle on random rays, skipping rays whose
// closest approach to the analytic surface is within one cell of tangency.
inline AgreementStats tracer_agreement(const SdfGrid& grid, const std::function<double(const Vec3&)>& sdf, int rays,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double h = grid.spacing();
  const TraceParams params = TraceParams::for_grid(grid);
  AgreementStats st;
  for (int r = 0; r < rays; ++r) {
    const Ray ray = random_ray(rng);
    ++st.rays;
    if (std::abs(min_field_along(grid, ray, sdf)) <= h) {
      ++st.excluded;
      continue;
    }
    const HitRecord a = sphere_trace(grid, ray, params);
    const HitRecord b = march_oracle(grid, ray, h / 100.0);
    if (a.hit != b.hit) continue;
    ++st.agree;
    if (a.hit) {
      ++st.hits_compared;
      st.max_dt = std::max(st.max_dt, std::abs(a.t - b.t));
    }
  }
  return st;
}

}  // namespace sdfdiff::testing
