#pragma once

#include <vector>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/vec3.hpp"

namespace sdfdiff {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Pinhole camera. Square pixels; pixel (0,0) is the top-left corner.
class Camera {
 public:
  Camera(Vec3 position, Vec3 look_at, Vec3 up, double vertical_fov, int width, int height);

  const Vec3& position() const { return position_; }
  const Vec3& look_at() const { return look_at_; }
  const Vec3& up() const { return up_; }
  double vertical_fov() const { return fov_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// Unit vector from the camera toward look_at.
  const Vec3& forward() const { return forward_; }

  /// Same pose with a different image size.
  Camera with_resolution(int width, int height) const;

 private:
  friend Ray generate_ray(const Camera& camera, int px, int py);

  Vec3 position_;
  Vec3 look_at_;
  Vec3 up_;
  double fov_;
  int width_;
  int height_;
  Vec3 forward_;
  Vec3 right_;
  Vec3 true_up_;
  double tan_half_fov_;
};

/// Directional light. `direction` points from the light toward the surface.
struct Light {
  Vec3 direction{0.0, 0.0, -1.0};
  double intensity = 1.0;
  double ambient = 0.1;
  double albedo = 1.0;

  void validate() const;
};

/// Light travelling along the camera's view direction.
Light headlight(const Camera& camera, double intensity = 1.0, double ambient = 0.1, double albedo = 1.0);

/// Ray through the center of pixel (px, py).
Ray generate_ray(const Camera& camera, int px, int py);

/// One camera per face center, edge center and corner of the cube around
/// `bbox_center` (6 + 12 + 8 = 26), each at `distance` from the center and
/// looking at it. Order: faces, edges, corners.
std::vector<Camera> canonical_rig(Vec3 bbox_center, double bbox_half_extent, double distance, double fov,
                                  int image_res);

/// Distance from a camera at `camera_distance` from the box center to the box
/// corner farthest from it, minimised over all viewing directions (attained on
/// a face axis): sqrt(D^2 + 2aD + 3a^2) for half extent a.
double far_corner_depth(double bbox_half_extent, double camera_distance);

/// Diameter in pixels of the projection of a sphere of radius `radius` at
/// depth `depth` for an image of `image_res` rows spanning `fov`.
double projected_diameter_px(double radius, double depth, double fov, int image_res);

/// Largest image resolution at which an h-radius sphere at the far corner
/// projects to at most 2 pixels, before clamping.
int image_res_unclamped(double spacing, double depth, double fov);

inline constexpr int kMinImageRes = 16;

/// Image resolution matched to the grid spacing, clamped to [16, max_res].
int image_res_for(const SdfGrid& grid, double camera_distance, double fov, int max_res = 512);

}  // namespace sdfdiff
