#include "stereo3d/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace stereo3d {

namespace {

// minimum 2D box height (px), maximum occlusion, maximum truncation
constexpr double kMinHeight[3] = {40.0, 25.0, 25.0};
constexpr int kMaxOcclusion[3] = {0, 1, 2};
constexpr double kMaxTruncation[3] = {0.15, 0.30, 0.50};

constexpr double kCollinearTol = 1e-9;

struct Pt {
  double x, z;
};

std::array<Pt, 4> footprint(const Box3D& b) {
  const auto corners = bottom_corners(b);
  std::array<Pt, 4> out;
  for (int k = 0; k < 4; ++k) out[k] = {corners[k].x, corners[k].z};
  return out;
}

double polygon_area(const std::vector<Pt>& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % n];
    a += p.x * q.z - q.x * p.z;
  }
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of a convex subject polygon by the half-plane to
// the left of edge a->b (counter-clockwise clip polygon).
std::vector<Pt> clip_by_edge(const std::vector<Pt>& poly, const Pt& a,
                             const Pt& b) {
  std::vector<Pt> out;
  const size_t n = poly.size();
  const auto side = [&](const Pt& p) {
    return (b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x);
  };
  for (size_t i = 0; i < n; ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % n];
    const double sp = side(p);
    const double sq = side(q);
    const bool pin = sp >= -kCollinearTol;
    const bool qin = sq >= -kCollinearTol;
    if (pin) out.push_back(p);
    if (pin != qin) {
      const double t = sp / (sp - sq);
      out.push_back({p.x + t * (q.x - p.x), p.z + t * (q.z - p.z)});
    }
  }
  return out;
}

}  // namespace

double footprint_intersection_area(const Box3D& a, const Box3D& b) {
  const auto fa = footprint(a);
  const auto fb = footprint(b);
  std::vector<Pt> poly(fa.begin(), fa.end());
  for (int e = 0; e < 4 && !poly.empty(); ++e)
    poly = clip_by_edge(poly, fb[e], fb[(e + 1) % 4]);
  if (poly.size() < 3) return 0.0;
  const double area = polygon_area(poly);
  return area < kCollinearTol ? 0.0 : area;
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const double inter = footprint_intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.w * a.l + b.w * b.l - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double overlap = std::min(a.y + 0.5 * a.h, b.y + 0.5 * b.h) -
                         std::max(a.y - 0.5 * a.h, b.y - 0.5 * b.h);
  if (overlap <= 0.0) return 0.0;
  const double inter = footprint_intersection_area(a, b) * overlap;
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<bool> stereo_tp_match(const std::vector<DetectionRecord>& dets,
                                  const std::vector<GroundTruthRecord>& gts,
                                  double iou_thresh) {
  std::vector<bool> flags(dets.size(), false);
  std::vector<bool> claimed(gts.size(), false);
  for (size_t i = 0; i < dets.size(); ++i) {
    if (!dets[i].right.has_value())
      throw InvalidArgument("stereo matching needs right boxes");
    int best_l = -1, best_r = -1;
    double iou_l = 0.0, iou_r = 0.0;
    for (size_t j = 0; j < gts.size(); ++j) {
      if (claimed[j]) continue;
      const double il = iou_2d(dets[i].left, gts[j].left);
      const double ir = iou_2d(*dets[i].right, gts[j].right);
      if (il > iou_l) {
        iou_l = il;
        best_l = static_cast<int>(j);
      }
      if (ir > iou_r) {
        iou_r = ir;
        best_r = static_cast<int>(j);
      }
    }
    if (best_l >= 0 && best_l == best_r && iou_l >= iou_thresh &&
        iou_r >= iou_thresh) {
      flags[i] = true;
      claimed[best_l] = true;
    }
  }
  return flags;
}

PRCurve average_precision(const std::vector<bool>& tp_flags,
                          const std::vector<double>& scores, int num_gt,
                          ApInterpolation interp) {
  if (num_gt <= 0) throw NoGroundTruth("average precision needs ground truth");
  if (tp_flags.size() != scores.size())
    throw InvalidArgument("flags and scores must align");

  std::vector<int> order(tp_flags.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });

  PRCurve curve;
  int tp = 0, fp = 0;
  std::vector<double> recalls, precisions;
  for (int i : order) {
    if (tp_flags[i])
      ++tp;
    else
      ++fp;
    const double recall = static_cast<double>(tp) / num_gt;
    const double precision = static_cast<double>(tp) / (tp + fp);
    recalls.push_back(recall);
    precisions.push_back(precision);
    curve.samples.emplace_back(recall, precision);
  }

  // precision envelope: best precision at recall >= r
  std::vector<double> envelope(precisions.size());
  double run = 0.0;
  for (size_t i = precisions.size(); i-- > 0;) {
    run = std::max(run, precisions[i]);
    envelope[i] = run;
  }
  const auto precision_at = [&](double r) {
    // first sample with recall >= r
    const auto it = std::lower_bound(recalls.begin(), recalls.end(), r);
    if (it == recalls.end()) return 0.0;
    return envelope[static_cast<size_t>(it - recalls.begin())];
  };

  double ap = 0.0;
  if (interp == ApInterpolation::ElevenPoint) {
    for (int k = 0; k <= 10; ++k) ap += precision_at(k / 10.0);
    ap /= 11.0;
  } else {
    for (int k = 1; k <= 40; ++k) ap += precision_at(k / 40.0);
    ap /= 40.0;
  }
  curve.ap = ap;
  return curve;
}

std::vector<bool> difficulty_filter(const std::vector<GroundTruthRecord>& gts,
                                    Difficulty regime, int image_height) {
  const int r = static_cast<int>(regime);
  std::vector<bool> eligible(gts.size(), false);
  for (size_t i = 0; i < gts.size(); ++i) {
    double v_min = gts[i].left.v_min;
    double v_max = gts[i].left.v_max;
    if (image_height > 0) {
      v_min = std::max(v_min, 0.0);
      v_max = std::min(v_max, static_cast<double>(image_height));
    }
    const double height = v_max - v_min;
    eligible[i] = height >= kMinHeight[r] &&
                  gts[i].occlusion <= kMaxOcclusion[r] &&
                  gts[i].truncation <= kMaxTruncation[r];
  }
  return eligible;
}

namespace {

double quantile(std::vector<double>& values, double p) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return 0.0;
  const double idx = p * (values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(idx));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double t = idx - lo;
  return values[lo] * (1.0 - t) + values[hi] * t;
}

}  // namespace

std::vector<DepthErrorBin> depth_error_stats(
    const std::vector<DepthErrorSample>& samples, const StereoCamera& camera,
    double bin_width) {
  const double fb = camera.focal_u * camera.baseline;
  std::map<long, std::pair<std::vector<double>, std::vector<double>>> bins;
  for (const auto& s : samples) {
    const long idx = std::lround(s.z_gt / bin_width);
    bins[idx].first.push_back(std::abs(s.z_det - s.z_gt));
    bins[idx].second.push_back(fb * std::abs(1.0 / s.z_det - 1.0 / s.z_gt));
  }
  std::vector<DepthErrorBin> out;
  for (auto& [idx, data] : bins) {
    DepthErrorBin b;
    b.center = idx * bin_width;
    b.count = static_cast<int>(data.first.size());
    b.depth_q25 = quantile(data.first, 0.25);
    b.depth_med = quantile(data.first, 0.5);
    b.depth_q75 = quantile(data.first, 0.75);
    b.disp_q25 = quantile(data.second, 0.25);
    b.disp_med = quantile(data.second, 0.5);
    b.disp_q75 = quantile(data.second, 0.75);
    out.push_back(b);
  }
  return out;
}

}  // namespace stereo3d
