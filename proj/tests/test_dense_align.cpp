#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stereo3d/dense_align.hpp"
#include "stereo3d/synth_oracle.hpp"

using namespace stereo3d;

namespace {

StereoCamera cam_720() {
  StereoCamera cam;
  cam.focal_u = cam.focal_v = 720.0;
  cam.principal_u = 620.0;
  cam.principal_v = 187.0;
  cam.baseline = 0.54;
  cam.image_width = 1242;
  cam.image_height = 375;
  return cam;
}

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

ImagePatch patch_for(const Box2D& box, int margin = 4) {
  ImagePatch p;
  p.origin_u = static_cast<int>(std::floor(box.u_min)) - margin;
  p.origin_v = static_cast<int>(std::floor(box.v_min)) - margin;
  p.resize_to(static_cast<int>(std::ceil(box.width())) + 2 * margin + 1,
              static_cast<int>(std::ceil(box.height())) + 2 * margin + 1);
  return p;
}

void fill_random(ImagePatch& p, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u01(0.0f, 1.0f);
  for (auto& v : p.data) v = u01(rng);
}

// Face-on cuboid whose front face sits at an exact integer disparity
// (388.8 / 14.4 = 27 px), so a right patch that is the left patch shifted
// by 27 px realizes the ground-truth warp exactly.
const Box3D kIntegerDispBox{0.0, 0.9, 16.4, 0.0, 2.0, 4.0, 1.5};
constexpr int kIntegerDisp = 27;

}  // namespace

TEST_CASE("valid RoI covers the bottom half between the boundary keypoints") {
  const auto cam = cam_720();
  const Box3D box = kIntegerDispBox;
  const auto det = detection_of(cam, box);
  const ImagePatch left = patch_for(det.left_box);

  SUBCASE("boundary keypoints at the box edges give about half the box") {
    const auto roi = valid_roi(cam, box, left, det.left_box, det.left_box.u_min,
                               det.left_box.u_max);
    const double ratio = roi.count / det.left_box.area();
    CHECK(ratio > 0.42);
    CHECK(ratio < 0.58);
    // every masked pixel really is on the bottom half of the cuboid
    for (int r = 0; r < roi.height; ++r)
      for (int c = 0; c < roi.width; ++c)
        if (roi.mask[static_cast<size_t>(r) * roi.width + c]) {
          const auto hit = intersect_ray_cuboid(
              box, Vec3{},
              pixel_ray_direction(cam, roi.origin_u + c, roi.origin_v + r));
          REQUIRE(hit.has_value());
          CHECK(hit->point.y >= box.y);
        }
  }
  SUBCASE("one-pixel boundary interval gives a single column") {
    const auto roi =
        valid_roi(cam, box, left, det.left_box, 620.0, 621.0);
    CHECK(roi.count > 0);
    int column = -1;
    for (int r = 0; r < roi.height; ++r)
      for (int c = 0; c < roi.width; ++c)
        if (roi.mask[static_cast<size_t>(r) * roi.width + c]) {
          if (column < 0) column = c;
          CHECK(c == column);
        }
    CHECK(roi.origin_u + column == 620);
  }
  SUBCASE("keypoints outside the box clamp to an empty interval") {
    CHECK_THROWS_AS(valid_roi(cam, box, left, det.left_box,
                              det.left_box.u_max + 10.0,
                              det.left_box.u_max + 20.0),
                    EmptyRoI);
  }
}

TEST_CASE("pixel depth offsets") {
  const auto cam = cam_720();

  SUBCASE("face-on box: every RoI pixel sits on the front plane") {
    const Box3D box = kIntegerDispBox;
    const auto det = detection_of(cam, box);
    const ImagePatch left = patch_for(det.left_box);
    ValidRoI roi = valid_roi(cam, box, left, det.left_box, det.boundary_left,
                             det.boundary_right);
    const auto dz = pixel_depth_offsets(cam, box, roi);
    REQUIRE(roi.count > 0);
    for (size_t i = 0; i < roi.mask.size(); ++i)
      if (roi.mask[i]) CHECK(dz[i] == doctest::Approx(-2.0).epsilon(1e-12));
  }
  SUBCASE("rotated box matches the ray-plane oracle") {
    const Box3D box{1.0, 0.8, 14.0, 0.4, 1.8, 4.2, 1.5};
    const auto det = detection_of(cam, box);
    const ImagePatch left = patch_for(det.left_box);
    ValidRoI roi = valid_roi(cam, box, left, det.left_box, det.boundary_left,
                             det.boundary_right);
    const auto dz = pixel_depth_offsets(cam, box, roi);
    const double bound = 0.5 * std::hypot(box.w, box.l);
    for (int r = 0; r < roi.height; ++r)
      for (int c = 0; c < roi.width; ++c) {
        const size_t i = static_cast<size_t>(r) * roi.width + c;
        if (!roi.mask[i]) continue;
        const Vec3 dir =
            pixel_ray_direction(cam, roi.origin_u + c, roi.origin_v + r);
        const auto t = oracle::ray_enter_halfspaces(box, Vec3{}, dir);
        REQUIRE(t.has_value());
        CHECK(dz[i] == doctest::Approx(*t * dir.z - box.z).epsilon(1e-9));
        CHECK(std::abs(dz[i]) <= bound + 1e-9);
      }
  }
}

TEST_CASE("photometric cost") {
  const auto cam = cam_720();
  const Box3D box = kIntegerDispBox;
  const auto det = detection_of(cam, box);

  ImagePatch left = patch_for(det.left_box);
  fill_random(left, 99);
  ImagePatch right = left;
  right.origin_u = left.origin_u - kIntegerDisp;

  ValidRoI roi = valid_roi(cam, box, left, det.left_box, det.boundary_left,
                           det.boundary_right);
  const auto dz = pixel_depth_offsets(cam, box, roi);

  SUBCASE("ground-truth warp reproduces the left patch") {
    const double at_truth = photometric_cost(left, right, cam, roi, dz, box.z);
    CHECK(at_truth < 1e-9 * roi.count);
    for (double z : {box.z - 1.5, box.z - 0.3, box.z + 0.4, box.z + 2.0})
      CHECK(photometric_cost(left, right, cam, roi, dz, z) > at_truth);
  }
  SUBCASE("constant patches make the cost flat in depth") {
    ImagePatch flat_l = left, flat_r = right;
    for (auto& v : flat_l.data) v = 0.6f;
    for (auto& v : flat_r.data) v = 0.2f;
    const double e0 = photometric_cost(flat_l, flat_r, cam, roi, dz, box.z);
    for (double z : {box.z - 0.5, box.z + 0.5, box.z + 1.0}) {
      const double e = photometric_cost(flat_l, flat_r, cam, roi, dz, z);
      CHECK(e == doctest::Approx(e0).epsilon(1e-12));
    }
    CHECK(e0 == doctest::Approx(roi.count * 3 * 0.4 * 0.4).epsilon(1e-6));
  }
  SUBCASE("vanishing baseline with identical images gives zero cost") {
    StereoCamera nb = cam;
    nb.baseline = 1e-12;
    ImagePatch same = left;
    for (double z : {10.0, 16.4, 25.0})
      CHECK(photometric_cost(left, same, cam_720(), roi, dz, z) >= 0.0);
    for (double z : {10.0, 16.4, 25.0})
      CHECK(photometric_cost(left, same, nb, roi, dz, z) < 1e-12 * roi.count);
  }
  SUBCASE("common intensity shift cancels exactly") {
    ImagePatch l2 = left, r2 = right;
    for (auto& v : l2.data) v = v * 0.5f + 0.1f;
    for (auto& v : r2.data) v = v * 0.5f + 0.1f;
    // pick a depth whose warp stays on-patch so only the difference matters
    const double e_scaled = photometric_cost(l2, r2, cam, roi, dz, box.z + 0.2);
    ImagePatch l3 = l2, r3 = r2;
    for (auto& v : l3.data) v += 0.15f;
    for (auto& v : r3.data) v += 0.15f;
    const double e_shifted = photometric_cost(l3, r3, cam, roi, dz, box.z + 0.2);
    CHECK(e_shifted == doctest::Approx(e_scaled).epsilon(1e-9));
  }
  SUBCASE("shrinking the mask can only lower the cost") {
    const double full = photometric_cost(left, right, cam, roi, dz, box.z + 0.7);
    ValidRoI smaller = roi;
    int removed = 0;
    for (size_t i = 0; i < smaller.mask.size() && removed < roi.count / 2; ++i)
      if (smaller.mask[i]) {
        smaller.mask[i] = 0;
        --smaller.count;
        ++removed;
      }
    CHECK(photometric_cost(left, right, cam, smaller, dz, box.z + 0.7) <=
          full + 1e-12);
  }
  SUBCASE("non-positive warp depth throws") {
    CHECK_THROWS_AS(photometric_cost(left, right, cam, roi, dz, 1.5),
                    NonPositiveWarpDepth);
  }
}

TEST_CASE("two-stage depth enumeration") {
  const auto cam = cam_720();
  const Box3D box = kIntegerDispBox;
  const auto det = detection_of(cam, box);

  ImagePatch left = patch_for(det.left_box);
  fill_random(left, 7);
  ImagePatch right = left;
  right.origin_u = left.origin_u - kIntegerDisp;

  ValidRoI roi = valid_roi(cam, box, left, det.left_box, det.boundary_left,
                           det.boundary_right);
  const auto dz = pixel_depth_offsets(cam, box, roi);

  SUBCASE("finds the true depth from a perturbed start") {
    const auto res = align_depth(left, right, cam, roi, dz, 16.0);
    CHECK(std::abs(res.depth - box.z) < 1e-9);
    CHECK(res.pixels_used == roi.count);
    // stage counts: 50 coarse + 20 fine samples when all are admissible
    int s1 = 0, s2 = 0;
    for (const auto& s : res.curve) (s.stage == 1 ? s1 : s2)++;
    CHECK(s1 == 50);
    CHECK(s2 == 20);
  }
  SUBCASE("exact start stays within one fine step") {
    const auto res = align_depth(left, right, cam, roi, dz, box.z);
    CHECK(std::abs(res.depth - box.z) <= 0.05 + 1e-12);
  }
  SUBCASE("truth outside the sweep lands on the stage-1 boundary") {
    const auto res = align_depth(left, right, cam, roi, dz, box.z + 14.0);
    double lowest = 1e300;
    for (const auto& s : res.curve)
      if (s.stage == 1) lowest = std::min(lowest, s.depth);
    // capture range is z_init - 12.5; the best stage-1 sample is its edge
    CHECK(lowest == doctest::Approx(box.z + 14.0 - 12.5));
    CHECK(res.depth <= lowest + 0.5 + 1e-9);
  }
  SUBCASE("parallel and serial sweeps agree bitwise") {
    AlignOptions par, ser;
    par.parallel = true;
    ser.parallel = false;
    const auto a = align_depth(left, right, cam, roi, dz, 16.0, par);
    const auto b = align_depth(left, right, cam, roi, dz, 16.0, ser);
    CHECK(a.depth == b.depth);
    REQUIRE(a.curve.size() == b.curve.size());
    for (size_t i = 0; i < a.curve.size(); ++i) {
      CHECK(a.curve[i].depth == b.curve[i].depth);
      CHECK(a.curve[i].cost == b.curve[i].cost);
    }
  }
  SUBCASE("all candidates inadmissible") {
    AlignOptions opts;
    opts.stage1_count = 4;  // z in {-0.5, 0, 0.5, 1.0} + dz_min = -2
    CHECK_THROWS_AS(align_depth(left, right, cam, roi, dz, 0.5, opts),
                    AllCandidatesInvalid);
  }
}

TEST_CASE("align-and-rectify") {
  const auto cam = cam_720();
  const Box3D truth{0.6, 0.75, 15.0, 0.45, 1.7, 4.1, 1.5};
  const auto det = detection_of(cam, truth);
  const auto meas = extract_measurements(cam, det);
  const auto coarse_rep =
      solve_coarse(meas, {truth.w, truth.l, truth.h}, cam);
  REQUIRE(coarse_rep.converged);
  const Box3D coarse = coarse_rep.solution;

  SUBCASE("skip flag returns the coarse box untouched") {
    ImagePatch dummy;
    const auto out = align_and_rectify(cam, det, meas, coarse, dummy, dummy,
                                       {}, {}, /*skip_alignment=*/true);
    CHECK(out.box.z == coarse.z);
    CHECK(out.box.theta == coarse.theta);
    CHECK_FALSE(out.alignment.has_value());
  }
  SUBCASE("rectify at the coarse depth is idempotent") {
    const auto rep = solve_coarse(meas, {coarse.w, coarse.l, coarse.h}, cam,
                                  coarse.z);
    CHECK(std::abs(rep.solution.x - coarse.x) < 1e-8);
    CHECK(std::abs(rep.solution.y - coarse.y) < 1e-8);
    CHECK(std::abs(wrap_angle(rep.solution.theta - coarse.theta)) < 1e-8);
  }
  SUBCASE("end-to-end on a rendered object") {
    SyntheticObject obj;
    obj.id = 0;
    obj.gt = truth;
    obj.exact = det;
    obj.noisy = det;
    const auto [left, right] = render_stereo(obj, cam, 1234, 4.0);
    const auto out = align_and_rectify(cam, det, meas, coarse, left, right);
    REQUIRE(out.alignment.has_value());
    CHECK(std::abs(out.box.z - truth.z) <= 0.05);
    CHECK(std::abs(out.box.x - truth.x) <= 0.02);
    CHECK(std::abs(out.box.y - truth.y) <= 0.02);
    CHECK(std::abs(wrap_angle(out.box.theta - truth.theta)) <= 0.01);
  }
}
