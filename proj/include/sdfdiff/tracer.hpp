#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/scene.hpp"

namespace sdfdiff {

/// Result of the non-differentiable tracing stage.
struct HitRecord {
  bool hit = false;
  Vec3 s;                 // last ray position, just outside (or on) the surface
  Index3 cell;            // cell containing s
  double t = 0.0;         // ray parameter of s
  int steps = 0;          // marching iterations performed
  std::array<double, 8> local_values{};  // corner values of `cell`, x-fastest corner order
};

struct TraceParams {
  double eps = 0.0;       // hit threshold (world units)
  double min_step = 0.0;  // smallest advance per iteration
  int max_steps = 256;

  /// Level-dependent defaults: eps = 1e-4 h, min_step = 1e-6 h, 256 steps.
  static TraceParams for_grid(const SdfGrid& grid);
};

/// Parametric interval [t_enter, t_exit] of the ray inside the grid's box,
/// with t_enter clamped to >= 0. Empty when the ray misses the box.
std::optional<std::pair<double, double>> clip_to_box(const SdfGrid& grid, const Ray& ray);

/// Sphere tracing over the trilinear field. Starts at the box entry and
/// advances by max(f, min_step) until f < eps (hit), the box is left or the
/// step budget runs out (miss). A step that lands below -eps is bisected back
/// into the band, so the accepted position never crosses the surface.
/// `visited`, when given, receives every accepted ray parameter.
HitRecord sphere_trace(const SdfGrid& grid, const Ray& ray, const TraceParams& params,
                       std::vector<double>* visited = nullptr);

/// Brute-force reference: fixed increments through the box, then 60
/// bisection steps on the first sign change of the trilinear field.
HitRecord march_oracle(const SdfGrid& grid, const Ray& ray, double step);

}  // namespace sdfdiff
