#include "stereo3d/geometry.hpp"

#include <algorithm>
#include <limits>

namespace stereo3d {

void StereoCamera::validate() const {
  if (!(focal_u > 0.0) || !(focal_v > 0.0))
    throw InvalidArgument("focal length must be positive");
  if (!(baseline > 0.0)) throw InvalidArgument("baseline must be positive");
  if (image_width <= 0 || image_height <= 0)
    throw InvalidArgument("image size must be positive");
  if (!(principal_u > 0.0 && principal_u < image_width) ||
      !(principal_v > 0.0 && principal_v < image_height))
    throw InvalidArgument("principal point must lie inside the image");
}

void Box3D::validate() const {
  if (!(w > 0.0 && l > 0.0 && h > 0.0))
    throw InvalidArgument("box dimensions must be positive");
  if (!(z > 0.0)) throw InvalidArgument("box center must be in front of the camera");
}

Vec3 corner_position(const Box3D& box, int k) {
  const int c = k & 3;
  const double dw = kCornerSignW[c] * 0.5 * box.w;
  const double dl = kCornerSignL[c] * 0.5 * box.l;
  const double ct = std::cos(box.theta);
  const double st = std::sin(box.theta);
  // width axis maps to (cos, -sin), length axis to (sin, cos) in (x, z)
  return {box.x + dw * ct + dl * st,
          k < 4 ? box.y + 0.5 * box.h : box.y - 0.5 * box.h,
          box.z - dw * st + dl * ct};
}

std::array<Vec3, 4> bottom_corners(const Box3D& box) {
  return {corner_position(box, 0), corner_position(box, 1),
          corner_position(box, 2), corner_position(box, 3)};
}

std::array<Vec3, 8> corners(const Box3D& box) {
  std::array<Vec3, 8> out;
  for (int k = 0; k < 8; ++k) out[k] = corner_position(box, k);
  return out;
}

Vec2 project_point(const StereoCamera& camera, const Vec3& point, Eye eye) {
  if (!(point.z > 0.0)) throw NonPositiveDepth("point depth must be positive");
  const double x = eye == Eye::Left ? point.x : point.x - camera.baseline;
  return {x / point.z, point.y / point.z};
}

ProjectedBox project_box3d(const StereoCamera& camera, const Box3D& box,
                           double eps_u) {
  const auto pts = corners(box);
  for (const auto& p : pts)
    if (!(p.z > 0.0)) throw NonPositiveDepth("cuboid corner behind the camera");

  ProjectedBox out;
  double lu_min = std::numeric_limits<double>::infinity(), lu_max = -lu_min;
  double lv_min = lu_min, lv_max = -lu_min;
  double ru_min = lu_min, ru_max = -lu_min;
  for (const auto& p : pts) {
    const Vec2 pl = project_point(camera, p, Eye::Left);
    const Vec2 pr = project_point(camera, p, Eye::Right);
    lu_min = std::min(lu_min, pl.x);
    lu_max = std::max(lu_max, pl.x);
    lv_min = std::min(lv_min, pl.y);
    lv_max = std::max(lv_max, pl.y);
    ru_min = std::min(ru_min, pr.x);
    ru_max = std::max(ru_max, pr.x);
  }
  out.left = {lu_min, lv_min, lu_max, lv_max};
  out.right = {ru_min, lv_min, ru_max, lv_max};

  // Perspective keypoint: the nearest bottom corner, if it projects strictly
  // between its two cycle-adjacent corners. In face-on (and orthographic)
  // configurations the nearest corner coincides with a box edge and no
  // keypoint is visible in the box middle.
  const auto bottom = bottom_corners(box);
  int nearest = 0;
  for (int k = 1; k < 4; ++k)
    if (bottom[k].z < bottom[nearest].z) nearest = k;
  const double u_self = bottom[nearest].x / bottom[nearest].z;
  const auto u_of = [&](int k) { return bottom[k].x / bottom[k].z; };
  const double u_prev = u_of((nearest + 3) & 3);
  const double u_next = u_of((nearest + 1) & 3);
  const double lo = std::min(u_prev, u_next);
  const double hi = std::max(u_prev, u_next);
  if (u_self > lo + eps_u && u_self < hi - eps_u) {
    out.keypoint_u = u_self;
    out.keypoint_corner = nearest;
  }
  return out;
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Viewpoint viewpoint_from_pose(const Box3D& box) {
  if (!(box.z > 0.0)) throw NonPositiveDepth("pose depth must be positive");
  return {wrap_angle(box.theta + azimuth(box.x, box.z))};
}

std::optional<RayHit> intersect_ray_cuboid(const Box3D& box, const Vec3& origin,
                                           const Vec3& dir) {
  const double ct = std::cos(box.theta);
  const double st = std::sin(box.theta);
  // to object frame: inverse of the (width -> (c,-s), length -> (s,c)) map
  const auto to_obj = [&](const Vec3& p) -> Vec3 {
    const double dx = p.x - box.x, dy = p.y - box.y, dz = p.z - box.z;
    return {dx * ct - dz * st, dy, dx * st + dz * ct};
  };
  const Vec3 o = to_obj(origin);
  const Vec3 d{dir.x * ct - dir.z * st, dir.y, dir.x * st + dir.z * ct};

  const double half[3] = {0.5 * box.w, 0.5 * box.h, 0.5 * box.l};
  const double oc[3] = {o.x, o.y, o.z};
  const double dc[3] = {d.x, d.y, d.z};
  // face ids per axis: x -> (+w:0, -w:1), y -> (top:4, bottom:5), z -> (+l:2, -l:3)
  const int face_pos[3] = {0, 5, 2};  // face hit when entering from the + side
  const int face_neg[3] = {1, 4, 3};

  double t_enter = 0.0, t_exit = std::numeric_limits<double>::infinity();
  int face = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dc[a]) < 1e-15) {
      if (std::abs(oc[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t0 = (-half[a] - oc[a]) / dc[a];
    double t1 = (half[a] - oc[a]) / dc[a];
    int f = dc[a] > 0.0 ? face_neg[a] : face_pos[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_enter) {
      t_enter = t0;
      face = f;
    }
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return std::nullopt;
  }
  if (face < 0 || t_enter <= 0.0) return std::nullopt;  // origin inside or behind
  RayHit hit;
  hit.t = t_enter;
  hit.point = {origin.x + t_enter * dir.x, origin.y + t_enter * dir.y,
               origin.z + t_enter * dir.z};
  hit.face = face;
  return hit;
}

Vec3 pixel_ray_direction(const StereoCamera& camera, double u_pix, double v_pix) {
  return {camera.norm_u(u_pix), camera.norm_v(v_pix), 1.0};
}

Vec3 eye_center(const StereoCamera& camera, Eye eye) {
  return {eye == Eye::Left ? 0.0 : camera.baseline, 0.0, 0.0};
}

}  // namespace stereo3d
