#include <doctest.h>

#include <cmath>

#include "stereo3d/box_estimator.hpp"
#include "stereo3d/eval_metrics.hpp"
#include "stereo3d/synth_oracle.hpp"

using namespace stereo3d;

namespace {

StereoDetection detection_of(const StereoCamera& cam, const Box3D& box) {
  const auto proj = project_box3d(cam, box);
  StereoDetection det;
  det.left_box = {cam.pix_u(proj.left.u_l), cam.pix_v(proj.left.v_t),
                  cam.pix_u(proj.left.u_r), cam.pix_v(proj.left.v_b)};
  det.right_box = {cam.pix_u(proj.right.u_l), cam.pix_v(proj.right.v_t),
                   cam.pix_u(proj.right.u_r), cam.pix_v(proj.right.v_b)};
  det.alpha = viewpoint_from_pose(box);
  if (proj.keypoint_u) det.keypoint_u = cam.pix_u(*proj.keypoint_u);
  det.boundary_left = det.left_box.u_min;
  det.boundary_right = det.left_box.u_max;
  return det;
}

}  // namespace

TEST_CASE("scene generation is deterministic in the seed") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 42;
  spec.num_objects = 3;
  const auto a = generate_scene(spec, cam);
  const auto b = generate_scene(spec, cam);
  CHECK(serialize_scene(cam, a) == serialize_scene(cam, b));
  spec.seed = 43;
  CHECK(serialize_scene(cam, generate_scene(spec, cam)) !=
        serialize_scene(cam, a));
}

TEST_CASE("zero noise keeps the noisy detection equal to the exact one") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 5;
  spec.num_objects = 2;
  for (const auto& obj : generate_scene(spec, cam)) {
    CHECK(obj.noisy.left_box.u_min == obj.exact.left_box.u_min);
    CHECK(obj.noisy.right_box.u_max == obj.exact.right_box.u_max);
    CHECK(obj.noisy.keypoint_u == obj.exact.keypoint_u);
    CHECK(obj.noisy.boundary_left == obj.exact.boundary_left);
  }
}

TEST_CASE("objects never overlap in BEV") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 77;
  spec.num_objects = 5;
  const auto objects = generate_scene(spec, cam);
  REQUIRE(objects.size() == 5);
  for (size_t i = 0; i < objects.size(); ++i)
    for (size_t j = i + 1; j < objects.size(); ++j)
      CHECK(iou_bev(objects[i].gt, objects[j].gt) == 0.0);
}

TEST_CASE("exact detection is the bit-exact cuboid projection") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 19;
  spec.num_objects = 4;
  for (const auto& obj : generate_scene(spec, cam)) {
    const auto redo = detection_of(cam, obj.gt);
    CHECK(obj.exact.left_box.u_min == redo.left_box.u_min);
    CHECK(obj.exact.left_box.v_min == redo.left_box.v_min);
    CHECK(obj.exact.left_box.u_max == redo.left_box.u_max);
    CHECK(obj.exact.left_box.v_max == redo.left_box.v_max);
    CHECK(obj.exact.right_box.u_min == redo.right_box.u_min);
    CHECK(obj.exact.right_box.u_max == redo.right_box.u_max);
    CHECK(obj.exact.alpha.alpha == redo.alpha.alpha);
    REQUIRE(obj.exact.keypoint_u.has_value());
    CHECK(*obj.exact.keypoint_u == *redo.keypoint_u);
  }
}

TEST_CASE("noise fields perturb the requested quantities") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 100;
  spec.num_objects = 1;
  spec.sigma_disparity_px = 1.0;
  const auto objects = generate_scene(spec, cam);
  const auto& o = objects[0];
  // a pure disparity shift moves both right edges by the same amount
  const double shift_l = o.noisy.right_box.u_min - o.exact.right_box.u_min;
  const double shift_r = o.noisy.right_box.u_max - o.exact.right_box.u_max;
  CHECK(shift_l == doctest::Approx(shift_r).epsilon(1e-12));
  CHECK(shift_l != 0.0);
  CHECK(o.noisy.left_box.u_min == o.exact.left_box.u_min);
}

TEST_CASE("scene text round trip") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 31;
  spec.num_objects = 3;
  spec.sigma_edge_px = 0.5;
  const auto objects = generate_scene(spec, cam);
  const std::string text = serialize_scene(cam, objects);
  const auto parsed = parse_scene(text);
  CHECK(parsed.camera.focal_u == cam.focal_u);
  CHECK(parsed.camera.baseline == cam.baseline);
  REQUIRE(parsed.objects.size() == objects.size());
  for (size_t i = 0; i < objects.size(); ++i) {
    CHECK(parsed.objects[i].gt.x == objects[i].gt.x);
    CHECK(parsed.objects[i].gt.theta == objects[i].gt.theta);
    CHECK(parsed.objects[i].exact.left_box.u_min ==
          objects[i].exact.left_box.u_min);
    CHECK(parsed.objects[i].noisy.right_box.u_max ==
          objects[i].noisy.right_box.u_max);
    CHECK(parsed.objects[i].exact.keypoint_u ==
          objects[i].exact.keypoint_u);
  }
  CHECK(serialize_scene(parsed.camera, parsed.objects) == text);
  CHECK_THROWS_AS(parse_scene("bogus 1\n"), MalformedRow);
}

TEST_CASE("rendered pair realizes the analytic disparity") {
  // face-on cuboid with constant front-face disparity 388.8/14.4 = 27 px:
  // both views sample identical 3D surface points, so the photometric cost
  // at the true depth vanishes to rounding error
  StereoCamera cam;
  cam.focal_u = cam.focal_v = 720.0;
  cam.principal_u = 620.0;
  cam.principal_v = 187.0;
  cam.baseline = 0.54;
  cam.image_width = 1242;
  cam.image_height = 375;

  SyntheticObject obj;
  obj.id = 0;
  obj.gt = {0.0, 0.9, 16.4, 0.0, 2.0, 4.0, 1.5};
  obj.exact = detection_of(cam, obj.gt);
  obj.noisy = obj.exact;

  const auto [left, right] = render_stereo(obj, cam, 2024, 4.0);
  ValidRoI roi = valid_roi(cam, obj.gt, left, obj.exact.left_box,
                           obj.exact.boundary_left, obj.exact.boundary_right);
  const auto dz = pixel_depth_offsets(cam, obj.gt, roi);
  const double at_truth =
      photometric_cost(left, right, cam, roi, dz, obj.gt.z);
  CHECK(at_truth < 1e-9 * roi.count);

  // and the two-stage search locks onto it from a biased start
  const auto res = align_depth(left, right, cam, roi, dz, obj.gt.z - 1.3);
  CHECK(std::abs(res.depth - obj.gt.z) <= 0.05 + 1e-9);
}

TEST_CASE("corner-on rendered objects align to the nearest fine step") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.num_objects = 1;
  spec.z_min = 10.0;
  spec.z_max = 25.0;
  int good = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    spec.seed = seed;
    const auto objects = generate_scene(spec, cam);
    const auto& obj = objects[0];
    const auto [left, right] = render_stereo(obj, cam, seed * 97, 4.0);
    ValidRoI roi =
        valid_roi(cam, obj.gt, left, obj.exact.left_box,
                  obj.exact.boundary_left, obj.exact.boundary_right);
    const auto dz = pixel_depth_offsets(cam, obj.gt, roi);
    const double z_init = obj.gt.z + (seed % 2 ? 0.8 : -1.1);
    const auto res = align_depth(left, right, cam, roi, dz, z_init);
    if (std::abs(res.depth - obj.gt.z) <= 0.05 + 1e-9) ++good;
  }
  CHECK(good >= 9);
}

TEST_CASE("zero texture frequency leaves the cost depth-invariant") {
  StereoCamera cam;
  cam.focal_u = cam.focal_v = 720.0;
  cam.principal_u = 620.0;
  cam.principal_v = 187.0;
  cam.baseline = 0.54;
  cam.image_width = 1242;
  cam.image_height = 375;

  SyntheticObject obj;
  obj.id = 0;
  obj.gt = {0.0, 0.9, 16.4, 0.0, 2.0, 4.0, 1.5};
  obj.exact = detection_of(cam, obj.gt);
  obj.noisy = obj.exact;

  const auto [left, right] = render_stereo(obj, cam, 555, /*frequency=*/0.0);
  // pull the boundary keypoints in so warped samples stay on the flat face
  ValidRoI roi = valid_roi(cam, obj.gt, left, obj.exact.left_box,
                           obj.exact.boundary_left + 3.0,
                           obj.exact.boundary_right - 3.0);
  const auto dz = pixel_depth_offsets(cam, obj.gt, roi);
  const double e0 = photometric_cost(left, right, cam, roi, dz, obj.gt.z);
  for (double delta : {-0.3, -0.1, 0.15, 0.3}) {
    const double e = photometric_cost(left, right, cam, roi, dz,
                                      obj.gt.z + delta);
    CHECK(std::abs(e - e0) < 1e-12 * roi.count);
  }
}

TEST_CASE("parallel and serial rendering agree bitwise") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 8;
  const auto objects = generate_scene(spec, cam);
  RenderOptions par, ser;
  par.parallel = true;
  ser.parallel = false;
  const auto [pl, pr] = render_stereo(objects[0], cam, 11, 4.0, par);
  const auto [sl, sr] = render_stereo(objects[0], cam, 11, 4.0, ser);
  CHECK(pl.data == sl.data);
  CHECK(pr.data == sr.data);
}
