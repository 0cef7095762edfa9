#include "sdfdiff/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdfdiff/errors.hpp"

namespace sdfdiff {

TraceParams TraceParams::for_grid(const SdfGrid& grid) {
  return {1e-4 * grid.spacing(), 1e-6 * grid.spacing(), 256};
}

std::optional<std::pair<double, double>> clip_to_box(const SdfGrid& grid, const Ray& ray) {
  const Vec3 lo = grid.bbox_min();
  const Vec3 hi = grid.bbox_max();
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < lo[a] || o > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o) / d;
    double tb = (hi[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

namespace {

void check_direction(const Ray& ray) {
  if (std::abs(norm(ray.direction) - 1.0) > 1e-9) throw InvalidArgument("ray direction must be unit length");
}

HitRecord make_hit(const SdfGrid& grid, const Ray& ray, double t, int steps) {
  HitRecord r;
  r.hit = true;
  r.t = t;
  r.s = cwise_max(grid.bbox_min(), cwise_min(grid.bbox_max(), ray.at(t)));
  r.cell = grid.cell_of(r.s);
  r.steps = steps;
  r.local_values = cell_corner_values(grid, r.cell);
  return r;
}

}  // namespace

HitRecord sphere_trace(const SdfGrid& grid, const Ray& ray, const TraceParams& params, std::vector<double>* visited) {
  check_direction(ray);
  if (!(params.eps > 0.0)) throw InvalidArgument("trace eps must be positive");
  HitRecord miss;
  const auto span = clip_to_box(grid, ray);
  if (!span) return miss;
  const auto [t_enter, t_exit] = *span;

  auto field = [&](double at) { return trilinear_clamped(grid, ray.at(at)); };
  double t = t_enter;
  double t_prev = t_enter;
  bool stepped = false;
  int steps = 0;
  while (steps < params.max_steps && t <= t_exit) {
    double f = field(t);
    ++steps;
    if (f < -params.eps && stepped) {
      // Overshoot: bisect back into the band between the last two positions.
      double lo = t_prev, hi = t;
      for (int it = 0; it < 60 && f < -params.eps; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = field(mid);
        if (fm >= params.eps) {
          lo = mid;
        } else {
          hi = mid;
          t = mid;
          f = fm;
        }
      }
    }
    if (visited) visited->push_back(t);
    if (f < params.eps) return make_hit(grid, ray, t, steps);
    t_prev = t;
    stepped = true;
    t += std::max(f, params.min_step);
  }
  miss.steps = steps;
  return miss;
}

HitRecord march_oracle(const SdfGrid& grid, const Ray& ray, double step) {
  check_direction(ray);
  if (!(step > 0.0)) throw InvalidArgument("oracle step must be positive");
  HitRecord miss;
  const auto span = clip_to_box(grid, ray);
  if (!span) return miss;
  const auto [t_enter, t_exit] = *span;

  auto f = [&](double t) { return trilinear_clamped(grid, ray.at(t)); };
  double t_prev = t_enter;
  double f_prev = f(t_prev);
  int steps = 1;
  if (f_prev <= 0.0) return make_hit(grid, ray, t_prev, steps);
  const auto count = static_cast<long>(std::ceil((t_exit - t_enter) / step));
  for (long n = 1; n <= count; ++n) {
    const double t = std::min(t_enter + n * step, t_exit);
    const double ft = f(t);
    ++steps;
    if (ft <= 0.0) {
      double lo = t_prev, hi = t;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
      }
      return make_hit(grid, ray, 0.5 * (lo + hi), steps);
    }
    t_prev = t;
  }
  miss.steps = steps;
  return miss;
}

}  // namespace sdfdiff
