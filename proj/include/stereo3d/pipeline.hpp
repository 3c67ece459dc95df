#pragma once

#include <string>
#include <vector>

#include "stereo3d/eval_metrics.hpp"
#include "stereo3d/synth_oracle.hpp"

// Multi-frame evaluation drivers shared by the CLI and the test suites,
// plus the CSV / SVG emitters for their outputs.

namespace stereo3d {

struct FrameData {
  std::vector<DetectionRecord> dets;
  std::vector<GroundTruthRecord> gts;
};

struct EvalOptions {
  double iou_2d = 0.7;
  std::vector<double> iou_3d_levels = {0.5, 0.7};
  ApInterpolation interp = ApInterpolation::ElevenPoint;
  int image_height = 0;
  bool stereo = true;  // right boxes available on both sides
};

struct EvalRow {
  std::string metric;  // ap2d_left | ap2d_right | ap2d_stereo | apbv | ap3d
  double iou = 0.0;
  std::string regime;  // easy | moderate | hard
  double ap = 0.0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
};

/// Per-regime interpolated AP for 2D left/right, stereo, BEV and 3D metrics.
/// Matching is greedy in score order; detections matched to a ground truth
/// outside the difficulty regime are dropped from scoring rather than
/// counted as false positives.
EvalTable run_evaluation(const std::vector<FrameData>& frames,
                         const EvalOptions& opts = {});

/// Fixed-order CSV: header "metric,iou,regime,ap", one row per table row.
std::string eval_table_csv(const EvalTable& table);

/// PR curves for every metric/regime, as "metric,iou,regime,recall,precision".
std::string pr_curves_csv(const std::vector<FrameData>& frames,
                          const EvalOptions& opts = {});

/// Pairs detections with ground truth by left-image 2D IoU >= iou_thresh
/// (score-greedy) and keeps pairs where both sides carry 3D boxes.
std::vector<DepthErrorSample> collect_depth_samples(
    const std::vector<FrameData>& frames, double iou_thresh = 0.7);

/// CSV: bin_center,count,depth_q25,depth_med,depth_q75,disp_q25,disp_med,disp_q75
std::string depth_bins_csv(const std::vector<DepthErrorBin>& bins);

/// Static SVG chart of median depth error (with quartile band) and median
/// disparity error against distance.
std::string depth_curve_svg(const std::vector<DepthErrorBin>& bins);

// --- label directory loading -------------------------------------------

/// Lists the *.txt files of dir in lexicographic order.
std::vector<std::string> list_label_files(const std::string& dir);

/// Loads per-frame label files from root/left and root/right (paired by
/// filename and row order). require_right=false tolerates a missing right
/// directory; right boxes are then absent and stereo metrics unavailable.
struct LoadedFrames {
  std::vector<FrameData> frames;
  std::vector<std::string> names;  // frame file names, no directory
  bool has_right = false;
};

LoadedFrames load_label_frames(const std::string& gt_root,
                               const std::string& det_root,
                               bool require_right);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace stereo3d
