#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/image.hpp"
#include "sdfdiff/scene.hpp"
#include "sdfdiff/tracer.hpp"

namespace sdfdiff {

/// Pixel value plus its derivatives with respect to the SDF samples of the
/// 4x4x4 block around the hit cell (cell-1 .. cell+2 on each axis).
struct PixelTape {
  static constexpr int kMaxSamples = 64;

  double pixel_value = 0.0;
  int count = 0;
  std::array<std::size_t, kMaxSamples> sample_indices{};
  std::array<double, kMaxSamples> sample_grads{};
};

/// Conservative intersection p = s + trilinear(s) * v.
Vec3 intersection_point(const Vec3& s, const Vec3& v, const SdfGrid& grid);

/// Unit normal at p: vertex gradients of the cell holding p, trilinearly
/// interpolated. Throws DegenerateNormal when the interpolated gradient
/// vanishes.
Vec3 surface_normal(const SdfGrid& grid, const Vec3& p);

/// Same, but interpolating inside an explicitly fixed cell.
Vec3 surface_normal_in_cell(const SdfGrid& grid, const Vec3& p, Index3 cell);

/// Stage two for one hit: diffuse shading at the conservative intersection,
/// with closed-form derivatives. The cell and s come from `hit` and are held
/// fixed; the normal is interpolated within that cell.
PixelTape shade_pixel(const HitRecord& hit, const SdfGrid& grid, const Light& light, const Ray& view);

/// Reference implementation of shade_pixel that records the computation on a
/// reverse-mode tape instead of using the closed-form chain rule.
PixelTape shade_pixel_taped(const HitRecord& hit, const SdfGrid& grid, const Light& light, const Ray& view);

/// Forward-only pixel value for a hit, with s and the cell frozen. This is the
/// function whose derivatives shade_pixel reports.
double shade_value(const HitRecord& hit, const SdfGrid& grid, const Light& light, const Ray& view);

struct RenderedView {
  Image image;
  std::vector<PixelTape> tapes;     // one per hit pixel, in raster order
  std::vector<std::size_t> tape_pixel;  // flat pixel index of each tape
};

/// Full two-stage render. Misses are background 0; tapes only when requested.
RenderedView render(const SdfGrid& grid, const Camera& camera, const Light& light, bool with_gradients,
                    const TraceParams& trace);

inline RenderedView render(const SdfGrid& grid, const Camera& camera, const Light& light, bool with_gradients) {
  return render(grid, camera, light, with_gradients, TraceParams::for_grid(grid));
}

}  // namespace sdfdiff
