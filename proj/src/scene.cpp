#include "sdfdiff/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sdfdiff/errors.hpp"

namespace sdfdiff {

Camera::Camera(Vec3 position, Vec3 look_at, Vec3 up, double vertical_fov, int width, int height)
    : position_(position), look_at_(look_at), up_(up), fov_(vertical_fov), width_(width), height_(height) {
  const Vec3 view = look_at - position;
  if (!(norm(view) > 0.0)) throw InvalidArgument("camera position coincides with look_at");
  if (!(vertical_fov > 0.0 && vertical_fov < std::numbers::pi)) throw InvalidArgument("fov must lie in (0, pi)");
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  forward_ = normalized(view);
  const Vec3 side = cross(forward_, up);
  if (norm(side) < 1e-12 * std::max(1.0, norm(up))) throw InvalidArgument("camera up vector parallel to view direction");
  right_ = normalized(side);
  true_up_ = cross(right_, forward_);
  tan_half_fov_ = std::tan(0.5 * vertical_fov);
}

Camera Camera::with_resolution(int width, int height) const {
  return Camera(position_, look_at_, up_, fov_, width, height);
}

void Light::validate() const {
  if (!(std::isfinite(intensity) && intensity >= 0.0)) throw InvalidArgument("light intensity must be >= 0");
  if (!(std::isfinite(ambient) && ambient >= 0.0)) throw InvalidArgument("ambient must be >= 0");
  if (!(std::isfinite(albedo) && albedo >= 0.0 && albedo <= 1.0)) throw InvalidArgument("albedo must lie in [0,1]");
  if (std::abs(norm(direction) - 1.0) > 1e-9) throw InvalidArgument("light direction must be unit length");
}

Light headlight(const Camera& camera, double intensity, double ambient, double albedo) {
  Light l{camera.forward(), intensity, ambient, albedo};
  l.validate();
  return l;
}

Ray generate_ray(const Camera& camera, int px, int py) {
  if (px < 0 || py < 0 || px >= camera.width_ || py >= camera.height_) {
    throw InvalidArgument("pixel (" + std::to_string(px) + "," + std::to_string(py) + ") outside the image");
  }
  const double aspect = static_cast<double>(camera.width_) / camera.height_;
  const double sx = (2.0 * (px + 0.5) / camera.width_ - 1.0) * camera.tan_half_fov_ * aspect;
  const double sy = (1.0 - 2.0 * (py + 0.5) / camera.height_) * camera.tan_half_fov_;
  const Vec3 d = camera.forward_ + sx * camera.right_ + sy * camera.true_up_;
  return {camera.position_, normalized(d)};
}

std::vector<Camera> canonical_rig(Vec3 bbox_center, double bbox_half_extent, double distance, double fov,
                                  int image_res) {
  if (!(bbox_half_extent > 0.0)) throw InvalidArgument("bounding box half extent must be positive");
  if (!(distance > bbox_half_extent * std::numbers::sqrt3)) {
    throw InvalidArgument("camera distance must exceed the box half-diagonal");
  }
  std::vector<Camera> rig;
  rig.reserve(26);
  for (int nonzero = 1; nonzero <= 3; ++nonzero) {
    for (int sz = 1; sz >= -1; --sz)
      for (int sy = 1; sy >= -1; --sy)
        for (int sx = 1; sx >= -1; --sx) {
          if ((sx != 0) + (sy != 0) + (sz != 0) != nonzero) continue;
          const Vec3 u = normalized(Vec3{double(sx), double(sy), double(sz)});
          const Vec3 up = (sx == 0 && sy == 0) ? Vec3{0.0, 1.0, 0.0} : Vec3{0.0, 0.0, 1.0};
          rig.emplace_back(bbox_center + distance * u, bbox_center, up, fov, image_res, image_res);
        }
  }
  return rig;
}

double far_corner_depth(double bbox_half_extent, double camera_distance) {
  const double a = bbox_half_extent;
  const double d = camera_distance;
  return std::sqrt(d * d + 2.0 * a * d + 3.0 * a * a);
}

double projected_diameter_px(double radius, double depth, double fov, int image_res) {
  const double radius_px = radius / depth * (0.5 * image_res) / std::tan(0.5 * fov);
  return 2.0 * radius_px;
}

int image_res_unclamped(double spacing, double depth, double fov) {
  // diameter = (h/z) * R / tan(fov/2) <= 2
  const double bound = 2.0 * depth * std::tan(0.5 * fov) / spacing;
  auto r = static_cast<int>(std::floor(bound));
  // floor() can land one off when the bound is an integer up to rounding.
  while (r > 0 && projected_diameter_px(spacing, depth, fov, r) > 2.0) --r;
  while (projected_diameter_px(spacing, depth, fov, r + 1) <= 2.0) ++r;
  return r;
}

int image_res_for(const SdfGrid& grid, double camera_distance, double fov, int max_res) {
  if (!(camera_distance > 0.0) || !(fov > 0.0)) throw InvalidArgument("camera distance and fov must be positive");
  const double depth = far_corner_depth(0.5 * grid.extent(), camera_distance);
  const int r = image_res_unclamped(grid.spacing(), depth, fov);
  return std::clamp(r, kMinImageRes, std::max(kMinImageRes, max_res));
}

}  // namespace sdfdiff
