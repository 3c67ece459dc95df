#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "stereo3d/errors.hpp"

// Coordinate conventions used throughout:
//   camera frame:  x right, y down, z forward (left camera at the origin,
//                  right camera at x = +baseline)
//   image coords:  u horizontal, v vertical, in pixels; "normalized"
//                  coordinates are (pixel - principal) / focal
//   object frame:  width axis along object x, length axis along object z,
//                  yaw theta rotates the object about the vertical axis so
//                  that theta = 0 puts the width along camera x and the
//                  length along camera z.

namespace stereo3d {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Wraps an angle into (-pi, pi] going through sin/cos, so any 2*pi offset
// maps to the same value.
inline double wrap_angle(double a) {
  double r = std::atan2(std::sin(a), std::cos(a));
  if (r <= -kPi) r = kPi;
  return r;
}

enum class Eye { Left, Right };

/// Rectified pinhole stereo pair sharing focal length and principal point.
struct StereoCamera {
  double focal_u = 0.0;      // pixels
  double focal_v = 0.0;      // pixels
  double principal_u = 0.0;  // pixels
  double principal_v = 0.0;  // pixels
  double baseline = 0.0;     // meters
  int image_width = 0;       // pixels
  int image_height = 0;      // pixels

  void validate() const;

  double norm_u(double u_pix) const { return (u_pix - principal_u) / focal_u; }
  double norm_v(double v_pix) const { return (v_pix - principal_v) / focal_v; }
  double pix_u(double u_norm) const { return u_norm * focal_u + principal_u; }
  double pix_v(double v_norm) const { return v_norm * focal_v + principal_v; }
};

/// Axis-aligned 2D box in pixel coordinates, stored as corners.
struct Box2D {
  double u_min = 0.0, v_min = 0.0, u_max = 0.0, v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double center_u() const { return 0.5 * (u_min + u_max); }
  double center_v() const { return 0.5 * (v_min + v_max); }
  double area() const { return width() * height(); }
  bool valid() const { return u_min < u_max && v_min < v_max; }
};

/// Axis-aligned 2D box in normalized image coordinates.
struct NormalizedBox2D {
  double u_l = 0.0, v_t = 0.0, u_r = 0.0, v_b = 0.0;

  bool valid() const { return u_l < u_r && v_t < v_b; }
};

/// Oriented cuboid in the left-camera frame. (x, y, z) is the cuboid
/// center (y is the vertical CENTER, not the bottom face), theta the yaw
/// about the vertical axis, and (w, l, h) the dimensions with w along the
/// object width axis and l along the heading axis.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;  // meters
  double theta = 0.0;                // radians, in (-pi, pi]
  double w = 0.0, l = 0.0, h = 0.0;  // meters

  void validate() const;
  double volume() const { return w * l * h; }
};

struct Viewpoint {
  double alpha = 0.0;  // radians, in (-pi, pi]
};

struct Dimensions {
  double w = 0.0, l = 0.0, h = 0.0;
};

// Bottom corner cycle. Corner k sits at the object-frame offset
// (sw[k]*w/2, sl[k]*l/2); k = 0 starts at (-w/2, -l/2) (the face nearer the
// camera at theta = 0) and the cycle runs counter-clockwise seen from above.
// Top corners reuse the same signs with index k + 4.
inline constexpr std::array<int, 4> kCornerSignW = {-1, +1, +1, -1};
inline constexpr std::array<int, 4> kCornerSignL = {-1, -1, +1, +1};

/// Camera-frame position of cuboid corner k (0..3 bottom, 4..7 top).
Vec3 corner_position(const Box3D& box, int k);

/// The 4 bottom corners of the cuboid in the fixed cyclic order above.
std::array<Vec3, 4> bottom_corners(const Box3D& box);

/// All 8 corners, bottom cycle first, then the matching top cycle.
std::array<Vec3, 8> corners(const Box3D& box);

/// Pinhole projection to normalized coordinates. Throws NonPositiveDepth
/// when the point is not strictly in front of the camera.
Vec2 project_point(const StereoCamera& camera, const Vec3& point, Eye eye);

/// Result of projecting a cuboid into both rectified views.
struct ProjectedBox {
  NormalizedBox2D left;
  NormalizedBox2D right;
  // Perspective keypoint: left-image u of the single bottom corner that
  // projects strictly inside the box (between the two adjacent corners).
  // Absent in face-on / orthographic configurations.
  std::optional<double> keypoint_u;
  std::optional<int> keypoint_corner;  // bottom-corner index 0..3
};

/// Projects all 8 corners; each 2D box is the axis-aligned hull. The
/// interior-ness test for the keypoint uses margin eps_u in normalized units.
ProjectedBox project_box3d(const StereoCamera& camera, const Box3D& box,
                           double eps_u = 1e-6);

/// Object azimuth as seen from the camera center: beta = atan2(-x, z).
inline double azimuth(double x, double z) { return std::atan2(-x, z); }

/// Intersection-over-union of two axis-aligned boxes; 0 when disjoint.
double iou_2d(const Box2D& a, const Box2D& b);

/// Viewpoint angle alpha = theta + beta, wrapped to (-pi, pi].
Viewpoint viewpoint_from_pose(const Box3D& box);

/// Ray / cuboid intersection (slab method in the object frame).
struct RayHit {
  double t = 0.0;    // parameter along dir of the first intersection
  Vec3 point;        // camera-frame hit position
  int face = -1;     // 0:+w 1:-w 2:+l 3:-l 4:top(-y) 5:bottom(+y)
};

/// First intersection of the ray origin + t*dir (t > 0) with the cuboid,
/// or nullopt when the ray misses.
std::optional<RayHit> intersect_ray_cuboid(const Box3D& box, const Vec3& origin,
                                           const Vec3& dir);

/// Ray through pixel center (u_pix, v_pix) of the given eye.
Vec3 pixel_ray_direction(const StereoCamera& camera, double u_pix, double v_pix);
Vec3 eye_center(const StereoCamera& camera, Eye eye);

/// Surrogate for the network outputs attached to one object: associated
/// 2D boxes in both views, viewpoint, the perspective keypoint when one is
/// visible, and the left/right boundary keypoints (all in pixels).
struct StereoDetection {
  Box2D left_box;
  Box2D right_box;
  Viewpoint alpha;
  std::optional<double> keypoint_u;  // left image, pixels
  double boundary_left = 0.0;        // pixels
  double boundary_right = 0.0;       // pixels
};

}  // namespace stereo3d
