#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stereo3d/geometry.hpp"

namespace stereo3d {

struct DetectionRecord {
  Box2D left;
  std::optional<Box2D> right;
  std::optional<Box3D> box3d;
  double score = 0.0;
  std::string label = "Car";
};

struct GroundTruthRecord {
  Box2D left;
  Box2D right;
  Box3D box3d;
  double truncation = 0.0;  // [0, 1]
  int occlusion = 0;        // {0, 1, 2, 3}
  std::string label = "Car";
  int object_id = 0;
};

enum class Difficulty { Easy, Moderate, Hard };

/// IoU of the rotated box footprints in the x-z plane (convex polygon
/// clipping).
double iou_bev(const Box3D& a, const Box3D& b);

/// Volumetric IoU: BEV intersection area times the vertical overlap.
double iou_3d(const Box3D& a, const Box3D& b);

/// Intersection area of the two footprint rectangles (exposed for iou_3d and
/// for verification).
double footprint_intersection_area(const Box3D& a, const Box3D& b);

/// Greedy score-ordered matching with the stereo true-positive rule: the left
/// box must match an unclaimed ground truth, the right box must match one,
/// and both must be the same object. Detections must be sorted by descending
/// score and carry right boxes.
std::vector<bool> stereo_tp_match(const std::vector<DetectionRecord>& dets,
                                  const std::vector<GroundTruthRecord>& gts,
                                  double iou_thresh);

enum class ApInterpolation { ElevenPoint, FortyPoint };

struct PRCurve {
  std::vector<std::pair<double, double>> samples;  // (recall, precision)
  double ap = 0.0;
};

/// Interpolated average precision from per-detection TP flags. Detections
/// are ranked by descending score (stable on ties). Throws NoGroundTruth
/// when num_gt is zero.
PRCurve average_precision(const std::vector<bool>& tp_flags,
                          const std::vector<double>& scores, int num_gt,
                          ApInterpolation interp = ApInterpolation::ElevenPoint);

/// KITTI difficulty regimes by 2D box height, occlusion and truncation.
/// Regimes are cumulative: everything eligible for easy is eligible for
/// moderate and hard. image_height > 0 clips boxes vertically before the
/// height test.
std::vector<bool> difficulty_filter(const std::vector<GroundTruthRecord>& gts,
                                    Difficulty regime, int image_height = 0);

struct DepthErrorSample {
  double z_det = 0.0;
  double z_gt = 0.0;
};

struct DepthErrorBin {
  double center = 0.0;  // bin covers center +- bin_width/2
  int count = 0;
  double depth_q25 = 0.0, depth_med = 0.0, depth_q75 = 0.0;   // |z_det - z_gt|
  double disp_q25 = 0.0, disp_med = 0.0, disp_q75 = 0.0;      // f*b*|1/z_det - 1/z_gt|
};

/// Quantiles of absolute depth error and equivalent disparity error per
/// ground-truth distance bin. Empty bins are omitted.
std::vector<DepthErrorBin> depth_error_stats(
    const std::vector<DepthErrorSample>& samples, const StereoCamera& camera,
    double bin_width = 10.0);

}  // namespace stereo3d
