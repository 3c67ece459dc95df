#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "stereo3d/geometry.hpp"

// Target encoding rules for the stereo detector heads: union-box anchor
// assignment, the 6-term stereo box regression, RoI pair sampling, keypoint
// bin targets, keep-both NMS, and the dimension / viewpoint codecs.

namespace stereo3d {

/// A labelled object with associated boxes in both rectified views. The
/// union box is the componentwise hull of the two and is the anchor
/// classification target.
struct StereoGroundTruth {
  Box2D left;
  Box2D right;
  Box2D union_box;
  int object_id = 0;
};

StereoGroundTruth make_stereo_ground_truth(const Box2D& left, const Box2D& right,
                                           int object_id);

enum class AnchorLabelKind { Positive, Negative, Ignore };

struct AnchorLabel {
  AnchorLabelKind kind = AnchorLabelKind::Negative;
  int matched = -1;  // index of the matched ground truth, positives only
};

/// Labels each anchor against the union boxes: positive at IoU >= positive_min,
/// negative when every union box is below negative_max, ignore in between.
std::vector<AnchorLabel> label_anchors(const std::vector<Box2D>& anchors,
                                       const std::vector<StereoGroundTruth>& gts,
                                       double negative_max_iou = 0.3,
                                       double positive_min_iou = 0.7);

/// The six stereo regression terms [du, dw, du', dw', dv, dh]. Vertical
/// terms are shared between the views (rectified input).
struct StereoBoxDelta {
  double du = 0.0, dw = 0.0;      // left box center-u / log-width offsets
  double du_r = 0.0, dw_r = 0.0;  // right box, same parameterization
  double dv = 0.0, dh = 0.0;      // shared vertical offsets
};

StereoBoxDelta encode_stereo_delta(const Box2D& anchor,
                                   const StereoGroundTruth& gt);
/// Exact inverse of encode_stereo_delta; returns {left, right}.
std::pair<Box2D, Box2D> decode_stereo_delta(const Box2D& anchor,
                                            const StereoBoxDelta& delta);

enum class RoiPairLabel { Foreground, Background, Discarded };

struct RoiPairSample {
  RoiPairLabel label = RoiPairLabel::Discarded;
  int matched = -1;  // foreground only
};

/// Foreground: left RoI IoU with some left GT > fg_min AND the right RoI IoU
/// with that object's right GT > fg_min. Background: either side's best IoU
/// falls in [bg_min, fg_min). Everything else is discarded.
std::vector<RoiPairSample> sample_roi_pairs(
    const std::vector<Box2D>& left_rois, const std::vector<Box2D>& right_rois,
    const std::vector<StereoGroundTruth>& gts, double fg_min_iou = 0.5,
    double bg_min_iou = 0.1);

constexpr int kKeypointBins = 28;

/// Column-bin targets over the left GT box: one exclusive cell in the
/// 4 x bins perspective grid (absent when no keypoint projects inside the
/// box) plus one bin for each boundary keypoint.
struct KeypointTarget {
  std::optional<std::pair<int, int>> perspective;  // (semantic corner, u-bin)
  int left_boundary_bin = 0;
  int right_boundary_bin = 0;
};

int keypoint_bin(const Box2D& box, double u, int bins = kKeypointBins);

KeypointTarget encode_keypoint_target(
    const Box2D& left_gt,
    const std::optional<std::pair<double, int>>& perspective_u_corner,
    double boundary_left_u, double boundary_right_u, int bins = kKeypointBins);

struct ScoredStereoBox {
  Box2D left;
  Box2D right;
  double score = 0.0;
};

/// Greedy NMS survivors (indices), highest score first; ties keep input order.
std::vector<int> greedy_nms(const std::vector<Box2D>& boxes,
                            const std::vector<double>& scores,
                            double iou_thresh);

/// Runs NMS on the two views independently; a pair survives only if it is
/// kept on both sides. The survivors are truncated to the top_k best scores
/// (2000 for training, 300 for testing).
std::vector<int> nms_keep_both(const std::vector<ScoredStereoBox>& pairs,
                               double iou_thresh, int top_k);

inline constexpr Dimensions kDimensionPrior{1.6, 3.9, 1.56};  // car class, m

std::array<double, 3> encode_dimension_offset(const Dimensions& gt,
                                              const Dimensions& prior);
Dimensions decode_dimension_offset(const std::array<double, 3>& offset,
                                   const Dimensions& prior);

/// Discontinuity-free angle regression target.
struct AngleEncoding {
  double sin_a = 0.0;
  double cos_a = 1.0;
};

inline AngleEncoding encode_angle(double alpha) {
  return {std::sin(alpha), std::cos(alpha)};
}
inline double decode_angle(const AngleEncoding& e) {
  return std::atan2(e.sin_a, e.cos_a);
}

/// Anchors of a given scale/ratio centered on a stride grid over the image.
std::vector<Box2D> anchor_grid(int image_width, int image_height, double scale,
                               double ratio, double stride);

/// The full pyramid anchor set: scales {32, 64, 128, 256, 512} at strides
/// scale/8, each with ratios {0.5, 1, 2}.
std::vector<Box2D> default_anchors(int image_width, int image_height);

}  // namespace stereo3d
