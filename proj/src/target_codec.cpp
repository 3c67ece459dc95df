#include "stereo3d/target_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stereo3d {

StereoGroundTruth make_stereo_ground_truth(const Box2D& left, const Box2D& right,
                                           int object_id) {
  if (!left.valid() || !right.valid())
    throw InvalidArgument("ground-truth boxes must be non-degenerate");
  StereoGroundTruth gt;
  gt.left = left;
  gt.right = right;
  gt.union_box = {std::min(left.u_min, right.u_min),
                  std::min(left.v_min, right.v_min),
                  std::max(left.u_max, right.u_max),
                  std::max(left.v_max, right.v_max)};
  gt.object_id = object_id;
  return gt;
}

std::vector<AnchorLabel> label_anchors(const std::vector<Box2D>& anchors,
                                       const std::vector<StereoGroundTruth>& gts,
                                       double negative_max_iou,
                                       double positive_min_iou) {
  std::vector<AnchorLabel> labels(anchors.size());
  for (size_t i = 0; i < anchors.size(); ++i) {
    double best = 0.0;
    int best_j = -1;
    for (size_t j = 0; j < gts.size(); ++j) {
      const double iou = iou_2d(anchors[i], gts[j].union_box);
      if (iou > best) {
        best = iou;
        best_j = static_cast<int>(j);
      }
    }
    if (best >= positive_min_iou) {
      labels[i] = {AnchorLabelKind::Positive, best_j};
    } else if (best < negative_max_iou) {
      labels[i] = {AnchorLabelKind::Negative, -1};
    } else {
      labels[i] = {AnchorLabelKind::Ignore, -1};
    }
  }
  return labels;
}

StereoBoxDelta encode_stereo_delta(const Box2D& anchor,
                                   const StereoGroundTruth& gt) {
  if (anchor.width() <= 1.0 || anchor.height() <= 1.0)
    throw DegenerateAnchor("anchor smaller than 1 px");
  StereoBoxDelta d;
  d.du = (gt.left.center_u() - anchor.center_u()) / anchor.width();
  d.dw = std::log(gt.left.width() / anchor.width());
  d.du_r = (gt.right.center_u() - anchor.center_u()) / anchor.width();
  d.dw_r = std::log(gt.right.width() / anchor.width());
  d.dv = (gt.left.center_v() - anchor.center_v()) / anchor.height();
  d.dh = std::log(gt.left.height() / anchor.height());
  return d;
}

std::pair<Box2D, Box2D> decode_stereo_delta(const Box2D& anchor,
                                            const StereoBoxDelta& delta) {
  if (anchor.width() <= 1.0 || anchor.height() <= 1.0)
    throw DegenerateAnchor("anchor smaller than 1 px");
  const double cv = anchor.center_v() + delta.dv * anchor.height();
  const double h = anchor.height() * std::exp(delta.dh);
  const auto make = [&](double du, double dw) {
    const double cu = anchor.center_u() + du * anchor.width();
    const double w = anchor.width() * std::exp(dw);
    return Box2D{cu - 0.5 * w, cv - 0.5 * h, cu + 0.5 * w, cv + 0.5 * h};
  };
  return {make(delta.du, delta.dw), make(delta.du_r, delta.dw_r)};
}

std::vector<RoiPairSample> sample_roi_pairs(
    const std::vector<Box2D>& left_rois, const std::vector<Box2D>& right_rois,
    const std::vector<StereoGroundTruth>& gts, double fg_min_iou,
    double bg_min_iou) {
  if (left_rois.size() != right_rois.size())
    throw InvalidArgument("RoI pairs must come one-to-one");
  std::vector<RoiPairSample> out(left_rois.size());
  for (size_t i = 0; i < left_rois.size(); ++i) {
    double left_best = 0.0, right_best = 0.0;
    int left_j = -1;
    for (size_t j = 0; j < gts.size(); ++j) {
      const double li = iou_2d(left_rois[i], gts[j].left);
      if (li > left_best) {
        left_best = li;
        left_j = static_cast<int>(j);
      }
      right_best = std::max(right_best, iou_2d(right_rois[i], gts[j].right));
    }
    const double right_corr =
        left_j >= 0 ? iou_2d(right_rois[i], gts[left_j].right) : 0.0;
    if (left_best > fg_min_iou && right_corr > fg_min_iou) {
      out[i] = {RoiPairLabel::Foreground, left_j};
    } else if ((left_best >= bg_min_iou && left_best < fg_min_iou) ||
               (right_best >= bg_min_iou && right_best < fg_min_iou)) {
      out[i] = {RoiPairLabel::Background, -1};
    } else {
      out[i] = {RoiPairLabel::Discarded, -1};
    }
  }
  return out;
}

int keypoint_bin(const Box2D& box, double u, int bins) {
  const double t = (u - box.u_min) / box.width();
  const int bin = static_cast<int>(std::floor(t * bins));
  return std::clamp(bin, 0, bins - 1);
}

KeypointTarget encode_keypoint_target(
    const Box2D& left_gt,
    const std::optional<std::pair<double, int>>& perspective_u_corner,
    double boundary_left_u, double boundary_right_u, int bins) {
  KeypointTarget t;
  if (perspective_u_corner.has_value()) {
    const double u = perspective_u_corner->first;
    if (u >= left_gt.u_min && u <= left_gt.u_max)
      t.perspective = {perspective_u_corner->second,
                       keypoint_bin(left_gt, u, bins)};
  }
  t.left_boundary_bin = keypoint_bin(left_gt, boundary_left_u, bins);
  t.right_boundary_bin = keypoint_bin(left_gt, boundary_right_u, bins);
  return t;
}

std::vector<int> greedy_nms(const std::vector<Box2D>& boxes,
                            const std::vector<double>& scores,
                            double iou_thresh) {
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<int> kept;
  std::vector<bool> suppressed(boxes.size(), false);
  for (int i : order) {
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (int j : order)
      if (!suppressed[j] && j != i && iou_2d(boxes[i], boxes[j]) > iou_thresh)
        suppressed[j] = true;
  }
  return kept;
}

std::vector<int> nms_keep_both(const std::vector<ScoredStereoBox>& pairs,
                               double iou_thresh, int top_k) {
  std::vector<Box2D> left(pairs.size()), right(pairs.size());
  std::vector<double> scores(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    left[i] = pairs[i].left;
    right[i] = pairs[i].right;
    scores[i] = pairs[i].score;
  }
  const auto lk = greedy_nms(left, scores, iou_thresh);
  const auto rk = greedy_nms(right, scores, iou_thresh);
  std::vector<bool> in_left(pairs.size(), false);
  for (int i : lk) in_left[i] = true;
  std::vector<int> both;
  for (int i : rk)
    if (in_left[i]) both.push_back(i);
  std::stable_sort(both.begin(), both.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  if (static_cast<int>(both.size()) > top_k) both.resize(top_k);
  return both;
}

std::array<double, 3> encode_dimension_offset(const Dimensions& gt,
                                              const Dimensions& prior) {
  if (!(gt.w > 0 && gt.l > 0 && gt.h > 0 && prior.w > 0 && prior.l > 0 &&
        prior.h > 0))
    throw NonPositiveDimension("dimensions must be positive");
  return {std::log(gt.w / prior.w), std::log(gt.l / prior.l),
          std::log(gt.h / prior.h)};
}

Dimensions decode_dimension_offset(const std::array<double, 3>& offset,
                                   const Dimensions& prior) {
  if (!(prior.w > 0 && prior.l > 0 && prior.h > 0))
    throw NonPositiveDimension("prior dimensions must be positive");
  return {prior.w * std::exp(offset[0]), prior.l * std::exp(offset[1]),
          prior.h * std::exp(offset[2])};
}

std::vector<Box2D> anchor_grid(int image_width, int image_height, double scale,
                               double ratio, double stride) {
  // ratio = height / width at constant area scale^2
  const double w = scale / std::sqrt(ratio);
  const double h = scale * std::sqrt(ratio);
  std::vector<Box2D> anchors;
  for (double cv = 0.5 * stride; cv < image_height; cv += stride)
    for (double cu = 0.5 * stride; cu < image_width; cu += stride)
      anchors.push_back(
          {cu - 0.5 * w, cv - 0.5 * h, cu + 0.5 * w, cv + 0.5 * h});
  return anchors;
}

std::vector<Box2D> default_anchors(int image_width, int image_height) {
  static constexpr double kScales[] = {32, 64, 128, 256, 512};
  static constexpr double kRatios[] = {0.5, 1.0, 2.0};
  std::vector<Box2D> all;
  for (double scale : kScales)
    for (double ratio : kRatios) {
      auto a = anchor_grid(image_width, image_height, scale, ratio, scale / 8);
      all.insert(all.end(), a.begin(), a.end());
    }
  return all;
}

}  // namespace stereo3d
