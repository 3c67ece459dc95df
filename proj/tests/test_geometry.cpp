#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stereo3d/geometry.hpp"

using namespace stereo3d;

namespace {

StereoCamera test_camera() {
  StereoCamera cam;
  cam.focal_u = 720.0;
  cam.focal_v = 720.0;
  cam.principal_u = 620.0;
  cam.principal_v = 187.0;
  cam.baseline = 0.5;
  cam.image_width = 1242;
  cam.image_height = 375;
  return cam;
}

}  // namespace

TEST_CASE("bottom corners at zero yaw") {
  const Box3D box{0.0, 0.5, 10.0, 0.0, 2.0, 4.0, 1.5};
  const auto c = bottom_corners(box);
  // fixed cycle: (-w/2,-l/2), (+w/2,-l/2), (+w/2,+l/2), (-w/2,+l/2)
  CHECK(c[0].x == doctest::Approx(-1.0));
  CHECK(c[0].y == doctest::Approx(1.25));
  CHECK(c[0].z == doctest::Approx(8.0));
  CHECK(c[1].x == doctest::Approx(1.0));
  CHECK(c[1].z == doctest::Approx(8.0));
  CHECK(c[2].x == doctest::Approx(1.0));
  CHECK(c[2].z == doctest::Approx(12.0));
  CHECK(c[3].x == doctest::Approx(-1.0));
  CHECK(c[3].z == doctest::Approx(12.0));
}

TEST_CASE("quarter turn swaps footprint extents") {
  const Box3D box{0.0, 0.5, 10.0, kPi / 2, 2.0, 4.0, 1.5};
  const auto c = bottom_corners(box);
  double x_lo = 1e9, x_hi = -1e9, z_lo = 1e9, z_hi = -1e9;
  bool found = false;
  for (const auto& p : c) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
    if (std::abs(p.x + 2.0) < 1e-12 && std::abs(p.y - 1.25) < 1e-12 &&
        std::abs(p.z - 9.0) < 1e-12)
      found = true;
  }
  CHECK(found);  // (-2, 1.25, 9) appears
  CHECK(x_hi - x_lo == doctest::Approx(4.0));
  CHECK(z_hi - z_lo == doctest::Approx(2.0));
}

TEST_CASE("bottom corners match the rotation-matrix oracle") {
  const Box3D box{1.0, 0.0, 5.0, 0.3, 1.6, 3.9, 1.5};
  const auto got = bottom_corners(box);
  const auto want = oracle::bottom_corners_rotmat(box);
  for (int k = 0; k < 4; ++k) {
    CHECK(got[k].x == doctest::Approx(want[k].x).epsilon(1e-12));
    CHECK(got[k].y == doctest::Approx(want[k].y).epsilon(1e-12));
    CHECK(got[k].z == doctest::Approx(want[k].z).epsilon(1e-12));
  }
}

TEST_CASE("point projection") {
  const auto cam = test_camera();
  const Vec2 a = project_point(cam, {0.0, 0.0, 10.0}, Eye::Left);
  CHECK(a.x == doctest::Approx(0.0));
  CHECK(a.y == doctest::Approx(0.0));
  const Vec2 b = project_point(cam, {1.0, 0.5, 10.0}, Eye::Right);
  CHECK(b.x == doctest::Approx(0.05));
  CHECK(b.y == doctest::Approx(0.05));
  const Vec2 c = project_point(cam, {-1.0, 1.25, 8.0}, Eye::Left);
  CHECK(c.x == doctest::Approx(-0.125));
  CHECK(c.y == doctest::Approx(0.15625));
  CHECK_THROWS_AS(project_point(cam, {0.0, 0.0, -1.0}, Eye::Left),
                  NonPositiveDepth);
}

TEST_CASE("cuboid projection, face-on case") {
  const auto cam = test_camera();
  const Box3D box{0.0, 0.5, 10.0, 0.0, 2.0, 4.0, 1.5};
  const auto proj = project_box3d(cam, box);
  CHECK(proj.left.u_l == doctest::Approx(-0.125).epsilon(1e-12));
  CHECK(proj.left.u_r == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(proj.left.v_t == doctest::Approx(-0.03125).epsilon(1e-12));
  CHECK(proj.left.v_b == doctest::Approx(0.15625).epsilon(1e-12));
  CHECK(proj.right.u_l == doctest::Approx(-0.1875).epsilon(1e-12));
  CHECK(proj.right.u_r == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK_FALSE(proj.keypoint_u.has_value());  // orthographic degenerate case
}

TEST_CASE("cuboid projection, corner-on keypoint") {
  const auto cam = test_camera();
  const Box3D box{0.0, 0.5, 10.0, 0.4, 2.0, 4.0, 1.5};
  const auto proj = project_box3d(cam, box);
  REQUIRE(proj.keypoint_u.has_value());
  // the keypoint is the projection of the nearest bottom corner
  const auto bc = bottom_corners(box);
  int nearest = 0;
  for (int k = 1; k < 4; ++k)
    if (bc[k].z < bc[nearest].z) nearest = k;
  CHECK(*proj.keypoint_corner == nearest);
  CHECK(*proj.keypoint_u ==
        doctest::Approx(bc[nearest].x / bc[nearest].z).epsilon(1e-12));
  // strictly inside the box edges
  CHECK(*proj.keypoint_u > proj.left.u_l);
  CHECK(*proj.keypoint_u < proj.left.u_r);
}

TEST_CASE("cuboid projection rejects boxes behind the camera") {
  const auto cam = test_camera();
  CHECK_THROWS_AS(project_box3d(cam, Box3D{0, 0, -5, 0, 2, 4, 1.5}),
                  NonPositiveDepth);
}

TEST_CASE("projection hull contains every corner") {
  const auto cam = test_camera();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int it = 0; it < 200; ++it) {
    const Box3D box{-5.0 + 10.0 * u01(rng), 2.0 * u01(rng),
                    6.0 + 30.0 * u01(rng),  -kPi + 2 * kPi * u01(rng),
                    1.0 + u01(rng),         3.0 + 2.0 * u01(rng),
                    1.0 + u01(rng)};
    const auto proj = project_box3d(cam, box);
    for (const auto& p : corners(box)) {
      const Vec2 pl = project_point(cam, p, Eye::Left);
      const Vec2 pr = project_point(cam, p, Eye::Right);
      CHECK(pl.x >= proj.left.u_l);
      CHECK(pl.x <= proj.left.u_r);
      CHECK(pl.y >= proj.left.v_t);
      CHECK(pl.y <= proj.left.v_b);
      CHECK(pr.x >= proj.right.u_l);
      CHECK(pr.x <= proj.right.u_r);
    }
  }
}

TEST_CASE("keypoint absent when the camera sits between the side planes") {
  const auto cam = test_camera();
  for (double x : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
    const Box3D box{x, 0.5, 12.0, 0.0, 2.0, 4.0, 1.5};
    CHECK_FALSE(project_box3d(cam, box).keypoint_u.has_value());
  }
}

TEST_CASE("viewpoint angle") {
  CHECK(viewpoint_from_pose(Box3D{0, 0, 10, 0.3, 1, 1, 1}).alpha ==
        doctest::Approx(0.3));
  CHECK(viewpoint_from_pose(Box3D{7.0, 0, 7.0, 0.0, 1, 1, 1}).alpha ==
        doctest::Approx(-kPi / 4));
  CHECK(viewpoint_from_pose(Box3D{-5.0, 0, 5.0, 1.0, 1, 1, 1}).alpha ==
        doctest::Approx(1.0 + kPi / 4));
}

TEST_CASE("viewpoint round trip recovers yaw") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int it = 0; it < 1000; ++it) {
    const Box3D box{-10 + 20 * u01(rng), 0.0,      5 + 40 * u01(rng),
                    -kPi + 2 * kPi * u01(rng), 1.6, 3.9,
                    1.5};
    const Viewpoint vp = viewpoint_from_pose(box);
    const double theta = wrap_angle(vp.alpha - azimuth(box.x, box.z));
    CHECK(std::abs(wrap_angle(theta - box.theta)) < 1e-12);
  }
}

TEST_CASE("equal viewpoints give relatively identical crops") {
  // Rotating a box rigidly about the camera's vertical axis keeps alpha
  // fixed; the u-extent of the crop rescales by the product of the depths of
  // the two extreme corners.
  const auto cam = test_camera();
  const Box3D a{1.5, 0.6, 14.0, 0.7, 1.7, 4.1, 1.4};
  const auto pa = project_box3d(cam, a);

  for (double phi : {-0.08, -0.03, 0.04, 0.09}) {
    const double c = std::cos(phi), s = std::sin(phi);
    Box3D b = a;
    b.x = c * a.x + s * a.z;
    b.z = -s * a.x + c * a.z;
    b.theta = wrap_angle(a.theta - phi);
    CHECK(viewpoint_from_pose(b).alpha ==
          doctest::Approx(viewpoint_from_pose(a).alpha).epsilon(1e-12));

    // locate the extreme-attaining corners of a
    const auto ca = corners(a);
    const auto cb = corners(b);
    int k_min = 0, k_max = 0;
    for (int k = 1; k < 8; ++k) {
      if (ca[k].x / ca[k].z < ca[k_min].x / ca[k_min].z) k_min = k;
      if (ca[k].x / ca[k].z > ca[k_max].x / ca[k_max].z) k_max = k;
    }
    const auto pb = project_box3d(cam, b);
    const double width_a = pa.left.u_r - pa.left.u_l;
    const double width_b = pb.left.u_r - pb.left.u_l;
    const double predicted =
        (ca[k_min].z * ca[k_max].z) / (cb[k_min].z * cb[k_max].z);
    CHECK(width_b / width_a == doctest::Approx(predicted).epsilon(1e-9));
  }
}

TEST_CASE("axis-aligned IoU") {
  const Box2D a{0, 0, 2, 2};
  CHECK(iou_2d(a, a) == doctest::Approx(1.0));
  CHECK(iou_2d(a, {1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou_2d(a, {5, 5, 6, 6}) == 0.0);
}

TEST_CASE("ray-cuboid intersection matches the half-space oracle") {
  const auto cam = test_camera();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int hits = 0;
  for (int it = 0; it < 2000; ++it) {
    const Box3D box{-4 + 8 * u01(rng),       -1 + 2 * u01(rng),
                    8 + 20 * u01(rng),       -kPi + 2 * kPi * u01(rng),
                    1.0 + 1.5 * u01(rng),    2.5 + 2.5 * u01(rng),
                    1.0 + u01(rng)};
    const double u = cam.principal_u + (-400 + 800 * u01(rng));
    const double v = cam.principal_v + (-150 + 300 * u01(rng));
    const Vec3 dir = pixel_ray_direction(cam, u, v);
    const auto got = intersect_ray_cuboid(box, Vec3{}, dir);
    const auto want = oracle::ray_enter_halfspaces(box, Vec3{}, dir);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      ++hits;
      CHECK(got->t == doctest::Approx(*want).epsilon(1e-9));
    }
  }
  CHECK(hits > 100);  // the sampling actually exercises the hit path
}

TEST_CASE("camera and box validation") {
  auto cam = test_camera();
  cam.baseline = 0.0;
  CHECK_THROWS_AS(cam.validate(), InvalidArgument);
  CHECK_THROWS_AS((Box3D{0, 0, 10, 0, -1, 4, 1.5}.validate()), InvalidArgument);
  CHECK_THROWS_AS((Box3D{0, 0, -10, 0, 1, 4, 1.5}.validate()), InvalidArgument);
}
