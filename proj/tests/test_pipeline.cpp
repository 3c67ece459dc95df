#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "stereo3d/kitti_io.hpp"
#include "stereo3d/pipeline.hpp"
#include "stereo3d/synth_oracle.hpp"

using namespace stereo3d;

namespace {

GroundTruthRecord synth_gt(const StereoCamera& cam, const SyntheticObject& o) {
  GroundTruthRecord gt;
  gt.left = o.exact.left_box;
  gt.right = o.exact.right_box;
  gt.box3d = o.gt;
  gt.object_id = o.id;
  return gt;
}

std::vector<FrameData> perfect_frames(int n_frames, uint64_t seed0) {
  const auto cam = make_default_camera();
  std::vector<FrameData> frames;
  for (int f = 0; f < n_frames; ++f) {
    SceneSpec spec;
    spec.seed = seed0 + f;
    spec.num_objects = 4;
    FrameData frame;
    for (const auto& obj : generate_scene(spec, cam)) {
      const auto gt = synth_gt(cam, obj);
      frame.gts.push_back(gt);
      DetectionRecord det;
      det.left = gt.left;
      det.right = gt.right;
      det.box3d = gt.box3d;
      det.score = 0.9;
      frame.dets.push_back(det);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace

TEST_CASE("detections equal to ground truth score AP 1 everywhere") {
  const auto frames = perfect_frames(3, 900);
  const auto table = run_evaluation(frames);
  REQUIRE(!table.rows.empty());
  for (const auto& row : table.rows) {
    INFO(row.metric << " " << row.regime);
    CHECK(row.ap == doctest::Approx(1.0));
  }
}

TEST_CASE("empty detections score AP 0 without error") {
  auto frames = perfect_frames(2, 950);
  for (auto& f : frames) f.dets.clear();
  const auto table = run_evaluation(frames);
  for (const auto& row : table.rows) CHECK(row.ap == doctest::Approx(0.0));
}

TEST_CASE("detections matched to out-of-regime ground truth are not penalized") {
  const auto cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 1234;
  spec.num_objects = 4;
  FrameData frame;
  int k = 0;
  for (const auto& obj : generate_scene(spec, cam)) {
    auto gt = synth_gt(cam, obj);
    // make half the objects hard-only via occlusion
    gt.occlusion = (k++ % 2) ? 2 : 0;
    frame.gts.push_back(gt);
    DetectionRecord det;
    det.left = gt.left;
    det.right = gt.right;
    det.box3d = gt.box3d;
    det.score = 0.9;
    frame.dets.push_back(det);
  }
  const auto table = run_evaluation({frame});
  for (const auto& row : table.rows) {
    INFO(row.metric << " " << row.regime);
    CHECK(row.ap == doctest::Approx(1.0));
  }
}

TEST_CASE("evaluation table CSV layout") {
  const auto frames = perfect_frames(1, 321);
  const auto csv = eval_table_csv(run_evaluation(frames));
  CHECK(csv.rfind("metric,iou,regime,ap\n", 0) == 0);
  CHECK(csv.find("ap2d_left,0.70,easy,") != std::string::npos);
  CHECK(csv.find("ap2d_stereo,0.70,hard,") != std::string::npos);
  CHECK(csv.find("apbv,0.50,moderate,") != std::string::npos);
  CHECK(csv.find("ap3d,0.70,hard,") != std::string::npos);
  // deterministic output
  CHECK(csv == eval_table_csv(run_evaluation(frames)));

  const auto pr = pr_curves_csv(frames);
  CHECK(pr.rfind("metric,iou,regime,recall,precision\n", 0) == 0);
  CHECK(pr.find("ap2d_left,0.70,easy,") != std::string::npos);
}

TEST_CASE("depth sample collection and CSV emission") {
  auto frames = perfect_frames(2, 777);
  // bias every detection depth by +0.5 m
  for (auto& f : frames)
    for (auto& d : f.dets) d.box3d->z += 0.5;
  const auto samples = collect_depth_samples(frames, 0.7);
  size_t total = 0;
  for (const auto& f : frames) total += f.gts.size();
  CHECK(samples.size() == total);
  const auto bins = depth_error_stats(samples, make_default_camera());
  REQUIRE(!bins.empty());
  for (const auto& b : bins) CHECK(b.depth_med == doctest::Approx(0.5));

  const auto csv = depth_bins_csv(bins);
  CHECK(csv.rfind("bin_center,count,", 0) == 0);
  const auto svg = depth_curve_svg(bins);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("label directory round trip") {
  namespace fs = std::filesystem;
  const fs::path root =
      fs::temp_directory_path() / "stereo3d_pipeline_test";
  fs::remove_all(root);
  for (const char* sub :
       {"gt/left", "gt/right", "det/left", "det/right"})
    fs::create_directories(root / sub);

  const auto frames = perfect_frames(2, 4242);
  for (size_t f = 0; f < frames.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.txt", f);
    std::vector<KittiLabelRow> gl, gr, dl, dr;
    for (const auto& gt : frames[f].gts) {
      gl.push_back(ground_truth_to_row(gt, false));
      gr.push_back(ground_truth_to_row(gt, true));
    }
    for (const auto& det : frames[f].dets) {
      dl.push_back(detection_to_row(det, false));
      dr.push_back(detection_to_row(det, true));
    }
    write_text_file((root / "gt/left" / name).string(),
                    serialize_label_rows(gl));
    write_text_file((root / "gt/right" / name).string(),
                    serialize_label_rows(gr));
    write_text_file((root / "det/left" / name).string(),
                    serialize_label_rows(dl));
    write_text_file((root / "det/right" / name).string(),
                    serialize_label_rows(dr));
  }

  const auto loaded = load_label_frames((root / "gt").string(),
                                        (root / "det").string(), true);
  CHECK(loaded.has_right);
  REQUIRE(loaded.frames.size() == frames.size());
  for (size_t f = 0; f < frames.size(); ++f) {
    CHECK(loaded.frames[f].gts.size() == frames[f].gts.size());
    CHECK(loaded.frames[f].dets.size() == frames[f].dets.size());
  }
  // the reloaded copy still evaluates perfectly (conversions round-trip)
  const auto table = run_evaluation(loaded.frames);
  for (const auto& row : table.rows) {
    INFO(row.metric << " " << row.regime);
    CHECK(row.ap == doctest::Approx(1.0));
  }
  fs::remove_all(root);
}
