// Command-line surface for the stereo 3D box pipeline:
//   synth       generate synthetic scene fixtures (and optional renderings)
//   solve       sparse coarse 3D box solve on a scene fixture
//   align       dense depth alignment + 3D rectification on rendered scenes
//   eval        2D / stereo / BEV / 3D average precision over label dirs
//   depth-curve depth-error-vs-distance statistics (CSV + SVG)

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stereo3d/box_estimator.hpp"
#include "stereo3d/config.hpp"
#include "stereo3d/dense_align.hpp"
#include "stereo3d/kitti_io.hpp"
#include "stereo3d/pipeline.hpp"
#include "stereo3d/png_io.hpp"
#include "stereo3d/synth_oracle.hpp"

namespace fs = std::filesystem;
using namespace stereo3d;

namespace {

void apply_threads(const Config& cfg) {
  int threads = cfg.threads;
  if (const char* env = std::getenv("STEREO3D_THREADS"); env && *env)
    threads = std::atoi(env);
  if (threads > 0) omp_set_num_threads(threads);
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

std::string object_png_name(int frame, int id, const char* side) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%06d_%02d_%s.png", frame, id, side);
  return buf;
}

DetectionRecord solved_detection(const StereoCamera& cam,
                                 const SyntheticObject& obj, const Box3D& box,
                                 const StereoDetection& det) {
  DetectionRecord rec;
  rec.left = det.left_box;
  rec.right = det.right_box;
  rec.box3d = box;
  rec.score = 1.0;
  (void)cam;
  (void)obj;
  return rec;
}

struct SceneFile {
  std::string path;
  ParsedScene scene;
  int index = 0;
};

std::vector<SceneFile> load_scene_dir(const std::string& dir) {
  std::vector<SceneFile> out;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".scene")
      names.push_back(entry.path().string());
  std::sort(names.begin(), names.end());
  int index = 0;
  for (const auto& path : names)
    out.push_back({path, parse_scene(read_text_file(path)), index++});
  if (out.empty()) throw IoError("no .scene files under " + dir);
  return out;
}

// --- synth ------------------------------------------------------------

int cmd_synth(uint64_t seed, int frames, int objects, const std::string& out,
              double noise_edge, double noise_disp, double noise_kp,
              double z_min, double z_max, bool truncation, bool render,
              double texture_freq, bool kitti) {
  const StereoCamera cam = make_default_camera();
  fs::create_directories(out);
  if (kitti)
    for (const char* sub : {"gt/left", "gt/right", "det/left", "det/right"})
      fs::create_directories(fs::path(out) / sub);

  for (int f = 0; f < frames; ++f) {
    SceneSpec spec;
    spec.seed = seed + static_cast<uint64_t>(f);
    spec.num_objects = objects;
    spec.sigma_edge_px = noise_edge;
    spec.sigma_disparity_px = noise_disp;
    spec.sigma_keypoint_bins = noise_kp;
    spec.z_min = z_min;
    spec.z_max = z_max;
    spec.allow_truncation = truncation;
    spec.texture_frequency = texture_freq;
    const auto scene = generate_scene(spec, cam);

    const std::string stem = frame_name(f);
    write_text_file(out + "/" + stem + ".scene", serialize_scene(cam, scene));

    if (render) {
      for (const auto& obj : scene) {
        const uint64_t tex_seed = spec.seed * 1000 + obj.id;
        const auto [left, right] =
            render_stereo(obj, cam, tex_seed, texture_freq);
        write_png_rgb(out + "/" + object_png_name(f, obj.id, "left"), left);
        write_png_rgb(out + "/" + object_png_name(f, obj.id, "right"), right);
      }
    }
    if (kitti) {
      std::vector<KittiLabelRow> gl, gr, dl, dr;
      for (const auto& obj : scene) {
        GroundTruthRecord gt;
        gt.left = obj.exact.left_box;
        gt.right = obj.exact.right_box;
        gt.box3d = obj.gt;
        gt.object_id = obj.id;
        gl.push_back(ground_truth_to_row(gt, false));
        gr.push_back(ground_truth_to_row(gt, true));

        // network-output surrogate: the noisy boxes with a coarse 3D solve
        DetectionRecord det;
        det.left = obj.noisy.left_box;
        det.right = obj.noisy.right_box;
        det.score = 1.0 / (1.0 + 0.05 * obj.id);
        try {
          const auto meas = extract_measurements(cam, obj.noisy);
          const auto rep = solve_coarse(
              meas, Dimensions{obj.gt.w, obj.gt.l, obj.gt.h}, cam);
          if (rep.converged) det.box3d = rep.solution;
        } catch (const Error&) {
          // leave the 3D box unset; the row keeps sentinel locations
        }
        dl.push_back(detection_to_row(det, false));
        dr.push_back(detection_to_row(det, true));
      }
      const std::string name = stem + ".txt";
      write_text_file(out + "/gt/left/" + name, serialize_label_rows(gl));
      write_text_file(out + "/gt/right/" + name, serialize_label_rows(gr));
      write_text_file(out + "/det/left/" + name, serialize_label_rows(dl));
      write_text_file(out + "/det/right/" + name, serialize_label_rows(dr));
    }
  }
  write_text_file(out + "/calib.txt", serialize_calib(cam));
  std::printf("wrote %d frame(s) under %s\n", frames, out.c_str());
  return 0;
}

// --- solve / align ------------------------------------------------------

int cmd_solve(const std::string& scene_dir, const std::string& out,
              bool use_exact, const Config& cfg) {
  fs::create_directories(out + "/left");
  fs::create_directories(out + "/right");
  std::vector<double> z_errors;
  for (const auto& sf : load_scene_dir(scene_dir)) {
    const StereoCamera& cam = sf.scene.camera;
    std::vector<KittiLabelRow> dl, dr;
    for (const auto& obj : sf.scene.objects) {
      const StereoDetection& det = use_exact ? obj.exact : obj.noisy;
      const auto meas = extract_measurements(cam, det, cfg.trunc_margin_px);
      const auto rep = solve_coarse(
          meas, Dimensions{obj.gt.w, obj.gt.l, obj.gt.h}, cam, std::nullopt,
          cfg.solve_options());
      auto rec = solved_detection(cam, obj, rep.solution, det);
      dl.push_back(detection_to_row(rec, false));
      dr.push_back(detection_to_row(rec, true));
      z_errors.push_back(std::abs(rep.solution.z - obj.gt.z));
    }
    const std::string name = fs::path(sf.path).stem().string() + ".txt";
    write_text_file(out + "/left/" + name, serialize_label_rows(dl));
    write_text_file(out + "/right/" + name, serialize_label_rows(dr));
  }
  std::sort(z_errors.begin(), z_errors.end());
  if (!z_errors.empty())
    std::printf("solved %zu object(s); median |z error| %.4f m, max %.4f m\n",
                z_errors.size(), z_errors[z_errors.size() / 2],
                z_errors.back());
  return 0;
}

int cmd_align(const std::string& scene_dir, const std::string& images,
              const std::string& out, const std::string& curves_out,
              bool use_exact, bool skip_alignment, const Config& cfg) {
  fs::create_directories(out + "/left");
  fs::create_directories(out + "/right");
  std::string curves = "frame,object,stage,depth,cost\n";
  std::vector<double> z_errors;
  char buf[160];
  for (const auto& sf : load_scene_dir(scene_dir)) {
    const StereoCamera& cam = sf.scene.camera;
    std::vector<KittiLabelRow> dl, dr;
    for (const auto& obj : sf.scene.objects) {
      const StereoDetection& det = use_exact ? obj.exact : obj.noisy;
      const auto meas = extract_measurements(cam, det, cfg.trunc_margin_px);
      const auto coarse_rep = solve_coarse(
          meas, Dimensions{obj.gt.w, obj.gt.l, obj.gt.h}, cam, std::nullopt,
          cfg.solve_options());

      Box3D final_box = coarse_rep.solution;
      if (!skip_alignment) {
        ImagePatch left = read_png_rgb(
            images + "/" + object_png_name(sf.index, obj.id, "left"));
        ImagePatch right = read_png_rgb(
            images + "/" + object_png_name(sf.index, obj.id, "right"));
        const auto lay = patch_layout(obj.exact, obj.gt, cam);
        if (left.width != lay.left_w || left.height != lay.left_h ||
            right.width != lay.right_w)
          throw IoError("patch size does not match the scene layout");
        left.origin_u = lay.left_u0;
        left.origin_v = lay.left_v0;
        right.origin_u = lay.right_u0;
        right.origin_v = lay.right_v0;

        const auto res = align_and_rectify(cam, det, meas, coarse_rep.solution,
                                           left, right, cfg.align_options(),
                                           cfg.solve_options());
        final_box = res.box;
        for (const auto& s : res.alignment->curve) {
          std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.4f,%.8f\n", sf.index,
                        obj.id, s.stage, s.depth, s.cost);
          curves += buf;
        }
      }
      auto rec = solved_detection(cam, obj, final_box, det);
      dl.push_back(detection_to_row(rec, false));
      dr.push_back(detection_to_row(rec, true));
      z_errors.push_back(std::abs(final_box.z - obj.gt.z));
    }
    const std::string name = fs::path(sf.path).stem().string() + ".txt";
    write_text_file(out + "/left/" + name, serialize_label_rows(dl));
    write_text_file(out + "/right/" + name, serialize_label_rows(dr));
  }
  if (!curves_out.empty()) write_text_file(curves_out, curves);
  std::sort(z_errors.begin(), z_errors.end());
  if (!z_errors.empty())
    std::printf("aligned %zu object(s); median |z error| %.4f m, max %.4f m\n",
                z_errors.size(), z_errors[z_errors.size() / 2],
                z_errors.back());
  return 0;
}

// --- eval / depth-curve ----------------------------------------------

int cmd_eval(const std::string& gt, const std::string& det,
             const std::string& out, const std::string& pr_out,
             const Config& cfg, int image_height) {
  const auto loaded = load_label_frames(gt, det, false);
  EvalOptions opts;
  opts.stereo = loaded.has_right;
  opts.interp = cfg.ap_points == 40 ? ApInterpolation::FortyPoint
                                    : ApInterpolation::ElevenPoint;
  opts.image_height = image_height;
  const auto table = run_evaluation(loaded.frames, opts);
  const std::string csv = eval_table_csv(table);
  if (!out.empty()) write_text_file(out, csv);
  std::fputs(csv.c_str(), stdout);
  if (!pr_out.empty()) write_text_file(pr_out, pr_curves_csv(loaded.frames, opts));
  return 0;
}

int cmd_depth_curve(const std::string& gt, const std::string& det,
                    const std::string& calib, const std::string& out,
                    const std::string& svg_out) {
  const auto loaded = load_label_frames(gt, det, false);
  const StereoCamera cam = parse_calib(read_text_file(calib));
  const auto samples = collect_depth_samples(loaded.frames, 0.7);
  const auto bins = depth_error_stats(samples, cam);
  const std::string csv = depth_bins_csv(bins);
  if (!out.empty()) write_text_file(out, csv);
  std::fputs(csv.c_str(), stdout);
  if (!svg_out.empty()) write_text_file(svg_out, depth_curve_svg(bins));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stereo 3D box estimation, dense alignment and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key=value config file");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic fixtures");
  uint64_t seed = 1;
  int frames = 1, objects = 1;
  std::string out_dir = "synth_out";
  double noise_edge = 0.0, noise_disp = 0.0, noise_kp = 0.0;
  double z_min = 5.0, z_max = 50.0, texture_freq = 4.0;
  bool truncation = false, render = false, kitti = false;
  synth->add_option("--seed", seed, "RNG seed (frame f uses seed+f)");
  synth->add_option("--frames", frames, "number of frames");
  synth->add_option("--objects", objects, "objects per frame");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--noise-edge", noise_edge, "per-edge noise, px");
  synth->add_option("--noise-disparity", noise_disp, "disparity noise, px");
  synth->add_option("--noise-keypoint", noise_kp, "keypoint noise, bins");
  synth->add_option("--z-min", z_min, "minimum center depth, m");
  synth->add_option("--z-max", z_max, "maximum center depth, m");
  synth->add_option("--texture-frequency", texture_freq, "cycles per meter");
  synth->add_flag("--allow-truncation", truncation,
                  "skip the fully-visible rejection rule");
  synth->add_flag("--render", render, "write stereo PNG patches");
  synth->add_flag("--kitti", kitti, "also write KITTI label directories");

  // solve
  auto* solve = app.add_subcommand("solve", "coarse 3D box from a fixture");
  std::string scene_dir, labels_out = "solve_out";
  bool use_exact = false;
  solve->add_option("--scenes", scene_dir, "directory of .scene files")
      ->required();
  solve->add_option("--out", labels_out, "output label root");
  solve->add_flag("--use-exact", use_exact,
                  "solve from the exact detections instead of the noisy ones");

  // align
  auto* align = app.add_subcommand("align", "dense alignment + rectification");
  std::string images_dir, align_out = "align_out", curves_out;
  bool skip_alignment = false;
  bool align_exact = false;
  align->add_option("--scenes", scene_dir, "directory of .scene files")
      ->required();
  align->add_option("--images", images_dir, "directory with rendered PNGs");
  align->add_option("--out", align_out, "output label root");
  align->add_option("--curves", curves_out, "cost-curve CSV path");
  align->add_flag("--skip-alignment", skip_alignment,
                  "emit the coarse boxes unchanged");
  align->add_flag("--use-exact", align_exact,
                  "use the exact detections instead of the noisy ones");

  // eval
  auto* eval = app.add_subcommand("eval", "average-precision tables");
  std::string gt_root, det_root, eval_out, pr_out;
  int image_height = 0;
  eval->add_option("--gt", gt_root, "ground-truth label root")->required();
  eval->add_option("--det", det_root, "detection label root")->required();
  eval->add_option("--out", eval_out, "AP table CSV path");
  eval->add_option("--pr-out", pr_out, "PR curve CSV path");
  eval->add_option("--image-height", image_height,
                   "clip boxes vertically before the height test");

  // depth-curve
  auto* curve = app.add_subcommand("depth-curve", "depth error vs distance");
  std::string calib_path, curve_out, svg_out;
  curve->add_option("--gt", gt_root, "ground-truth label root")->required();
  curve->add_option("--det", det_root, "detection label root")->required();
  curve->add_option("--calib", calib_path, "KITTI calib file")->required();
  curve->add_option("--out", curve_out, "bin CSV path");
  curve->add_option("--svg", svg_out, "SVG plot path");

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    apply_threads(cfg);

    if (synth->parsed())
      return cmd_synth(seed, frames, objects, out_dir, noise_edge, noise_disp,
                       noise_kp, z_min, z_max, truncation, render,
                       texture_freq, kitti);
    if (solve->parsed()) return cmd_solve(scene_dir, labels_out, use_exact, cfg);
    if (align->parsed())
      return cmd_align(scene_dir, images_dir, align_out, curves_out,
                       align_exact, skip_alignment, cfg);
    if (eval->parsed())
      return cmd_eval(gt_root, det_root, eval_out, pr_out, cfg, image_height);
    if (curve->parsed())
      return cmd_depth_curve(gt_root, det_root, calib_path, curve_out, svg_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
