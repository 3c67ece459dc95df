#include "stereo3d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stereo3d/kitti_io.hpp"

namespace stereo3d {

namespace {

enum class MetricKind { Left2D, Right2D, Stereo2D, Bev, Box3d };

const char* regime_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Moderate: return "moderate";
    default: return "hard";
  }
}

double metric_iou(MetricKind kind, const DetectionRecord& det,
                  const GroundTruthRecord& gt) {
  switch (kind) {
    case MetricKind::Left2D:
      return iou_2d(det.left, gt.left);
    case MetricKind::Right2D:
      return det.right ? iou_2d(*det.right, gt.right) : 0.0;
    case MetricKind::Bev:
      return det.box3d ? iou_bev(*det.box3d, gt.box3d) : 0.0;
    case MetricKind::Box3d:
      return det.box3d ? iou_3d(*det.box3d, gt.box3d) : 0.0;
    default:
      return 0.0;
  }
}

std::vector<int> score_order(const std::vector<DetectionRecord>& dets) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

struct Pooled {
  std::vector<bool> flags;
  std::vector<double> scores;
  int num_gt = 0;
};

// Greedy score-ordered matching against unclaimed ground truth. Detections
// matched to ground truth outside the regime are ignored (dropped from
// scoring); unmatched detections are false positives.
void match_frame(MetricKind kind, double thresh, const FrameData& frame,
                 const std::vector<bool>& eligible, Pooled& pooled) {
  const auto order = score_order(frame.dets);
  std::vector<bool> claimed(frame.gts.size(), false);
  for (int di : order) {
    const DetectionRecord& det = frame.dets[di];
    bool matched = false, ignored = false;
    if (kind == MetricKind::Stereo2D) {
      int best_l = -1, best_r = -1;
      double iou_l = 0.0, iou_r = 0.0;
      for (size_t j = 0; j < frame.gts.size(); ++j) {
        if (claimed[j]) continue;
        const double il = iou_2d(det.left, frame.gts[j].left);
        const double ir =
            det.right ? iou_2d(*det.right, frame.gts[j].right) : 0.0;
        if (il > iou_l) {
          iou_l = il;
          best_l = static_cast<int>(j);
        }
        if (ir > iou_r) {
          iou_r = ir;
          best_r = static_cast<int>(j);
        }
      }
      if (best_l >= 0 && best_l == best_r && iou_l >= thresh &&
          iou_r >= thresh) {
        claimed[best_l] = true;
        matched = true;
        ignored = !eligible[best_l];
      }
    } else {
      int best = -1;
      double best_iou = 0.0;
      for (size_t j = 0; j < frame.gts.size(); ++j) {
        if (claimed[j]) continue;
        const double iou = metric_iou(kind, det, frame.gts[j]);
        if (iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(j);
        }
      }
      if (best >= 0 && best_iou >= thresh) {
        claimed[best] = true;
        matched = true;
        ignored = !eligible[best];
      }
    }
    if (ignored) continue;
    pooled.flags.push_back(matched);
    pooled.scores.push_back(det.score);
  }
}

Pooled pool_metric(const std::vector<FrameData>& frames, MetricKind kind,
                   double thresh, Difficulty regime, const EvalOptions& opts) {
  Pooled pooled;
  for (const auto& frame : frames) {
    const auto eligible = difficulty_filter(frame.gts, regime, opts.image_height);
    pooled.num_gt +=
        static_cast<int>(std::count(eligible.begin(), eligible.end(), true));
    match_frame(kind, thresh, frame, eligible, pooled);
  }
  return pooled;
}

struct MetricJob {
  const char* name;
  MetricKind kind;
  double iou;
};

std::vector<MetricJob> metric_jobs(const EvalOptions& opts) {
  std::vector<MetricJob> jobs;
  jobs.push_back({"ap2d_left", MetricKind::Left2D, opts.iou_2d});
  if (opts.stereo) {
    jobs.push_back({"ap2d_right", MetricKind::Right2D, opts.iou_2d});
    jobs.push_back({"ap2d_stereo", MetricKind::Stereo2D, opts.iou_2d});
  }
  for (double lvl : opts.iou_3d_levels)
    jobs.push_back({"apbv", MetricKind::Bev, lvl});
  for (double lvl : opts.iou_3d_levels)
    jobs.push_back({"ap3d", MetricKind::Box3d, lvl});
  return jobs;
}

constexpr Difficulty kRegimes[3] = {Difficulty::Easy, Difficulty::Moderate,
                                    Difficulty::Hard};

}  // namespace

EvalTable run_evaluation(const std::vector<FrameData>& frames,
                         const EvalOptions& opts) {
  EvalTable table;
  for (const auto& job : metric_jobs(opts)) {
    for (Difficulty regime : kRegimes) {
      const Pooled pooled = pool_metric(frames, job.kind, job.iou, regime, opts);
      double ap = 0.0;
      if (pooled.num_gt > 0)
        ap = average_precision(pooled.flags, pooled.scores, pooled.num_gt,
                               opts.interp)
                 .ap;
      table.rows.push_back({job.name, job.iou, regime_name(regime), ap});
    }
  }
  return table;
}

std::string eval_table_csv(const EvalTable& table) {
  std::string out = "metric,iou,regime,ap\n";
  char buf[128];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.2f,%s,%.6f\n", row.metric.c_str(),
                  row.iou, row.regime.c_str(), row.ap);
    out += buf;
  }
  return out;
}

std::string pr_curves_csv(const std::vector<FrameData>& frames,
                          const EvalOptions& opts) {
  std::string out = "metric,iou,regime,recall,precision\n";
  char buf[160];
  for (const auto& job : metric_jobs(opts)) {
    for (Difficulty regime : kRegimes) {
      const Pooled pooled = pool_metric(frames, job.kind, job.iou, regime, opts);
      if (pooled.num_gt == 0) continue;
      const PRCurve curve = average_precision(pooled.flags, pooled.scores,
                                              pooled.num_gt, opts.interp);
      for (const auto& [recall, precision] : curve.samples) {
        std::snprintf(buf, sizeof(buf), "%s,%.2f,%s,%.6f,%.6f\n",
                      job.name, job.iou, regime_name(regime), recall,
                      precision);
        out += buf;
      }
    }
  }
  return out;
}

std::vector<DepthErrorSample> collect_depth_samples(
    const std::vector<FrameData>& frames, double iou_thresh) {
  std::vector<DepthErrorSample> samples;
  for (const auto& frame : frames) {
    const auto order = score_order(frame.dets);
    std::vector<bool> claimed(frame.gts.size(), false);
    for (int di : order) {
      const DetectionRecord& det = frame.dets[di];
      int best = -1;
      double best_iou = 0.0;
      for (size_t j = 0; j < frame.gts.size(); ++j) {
        if (claimed[j]) continue;
        const double iou = iou_2d(det.left, frame.gts[j].left);
        if (iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(j);
        }
      }
      if (best < 0 || best_iou < iou_thresh) continue;
      claimed[best] = true;
      if (det.box3d.has_value())
        samples.push_back({det.box3d->z, frame.gts[best].box3d.z});
    }
  }
  return samples;
}

std::string depth_bins_csv(const std::vector<DepthErrorBin>& bins) {
  std::string out =
      "bin_center,count,depth_q25,depth_med,depth_q75,disp_q25,disp_med,disp_"
      "q75\n";
  char buf[256];
  for (const auto& b : bins) {
    std::snprintf(buf, sizeof(buf),
                  "%.1f,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", b.center, b.count,
                  b.depth_q25, b.depth_med, b.depth_q75, b.disp_q25,
                  b.disp_med, b.disp_q75);
    out += buf;
  }
  return out;
}

std::string depth_curve_svg(const std::vector<DepthErrorBin>& bins) {
  const int width = 640, height = 400;
  const double ml = 60, mr = 20, mt = 20, mb = 50;
  double x_min = 0, x_max = 1, y_max = 1e-9;
  if (!bins.empty()) {
    x_min = bins.front().center - 5.0;
    x_max = bins.back().center + 5.0;
    for (const auto& b : bins) y_max = std::max(y_max, b.depth_q75);
  }
  y_max *= 1.15;
  const auto sx = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  const auto sy = [&](double y) {
    return height - mb - y / y_max * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  // axes
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ml, height - mb, static_cast<double>(width - mr), height - mb);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ml, mt, ml, height - mb);
  svg << buf;

  const auto polyline = [&](const char* color, auto getter) {
    std::string pts;
    for (const auto& b : bins) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", sx(b.center),
                    sy(getter(b)));
      pts += buf;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
  };
  // quartile band for the depth error
  if (!bins.empty()) {
    std::string pts;
    for (const auto& b : bins) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", sx(b.center),
                    sy(b.depth_q75));
      pts += buf;
    }
    for (auto it = bins.rbegin(); it != bins.rend(); ++it) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", sx(it->center),
                    sy(it->depth_q25));
      pts += buf;
    }
    svg << "<polygon fill=\"#aaccee\" fill-opacity=\"0.5\" stroke=\"none\" "
           "points=\"" << pts << "\"/>\n";
  }
  polyline("#1f4e9c", [](const DepthErrorBin& b) { return b.depth_med; });
  polyline("#c23b22", [](const DepthErrorBin& b) { return b.disp_med; });

  for (const auto& b : bins) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                  "text-anchor=\"middle\">%.0f</text>\n",
                  sx(b.center), height - mb + 16, b.center);
    svg << buf;
  }
  for (int k = 0; k <= 4; ++k) {
    const double y = y_max * k / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                  "text-anchor=\"end\">%.2f</text>\n",
                  ml - 6, sy(y) + 4, y);
    svg << buf;
  }
  svg << "<text x=\"" << (width / 2)
      << "\" y=\"" << (height - 12)
      << "\" font-size=\"12\" text-anchor=\"middle\">distance (m)</text>\n";
  svg << "<text x=\"" << (width - mr)
      << "\" y=\"" << (mt + 12)
      << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#1f4e9c\">median "
         "|depth error| (m)</text>\n";
  svg << "<text x=\"" << (width - mr)
      << "\" y=\"" << (mt + 28)
      << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#c23b22\">median "
         "disparity error (px)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> list_label_files(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  out << content;
}

LoadedFrames load_label_frames(const std::string& gt_root,
                               const std::string& det_root,
                               bool require_right) {
  namespace fs = std::filesystem;
  LoadedFrames loaded;
  const std::string gt_left = gt_root + "/left";
  const std::string gt_right = gt_root + "/right";
  const std::string det_left = det_root + "/left";
  const std::string det_right = det_root + "/right";
  loaded.has_right = fs::is_directory(gt_right) && fs::is_directory(det_right);
  if (require_right && !loaded.has_right)
    throw IoError("stereo evaluation needs left/ and right/ label dirs");

  loaded.names = list_label_files(gt_left);
  for (const auto& name : loaded.names) {
    FrameData frame;
    const auto gt_l = parse_label_file(read_text_file(gt_left + "/" + name));
    std::vector<KittiLabelRow> gt_r;
    if (loaded.has_right) {
      gt_r = parse_label_file(read_text_file(gt_right + "/" + name));
      if (gt_r.size() != gt_l.size())
        throw MalformedRow("gt row count mismatch between views: " + name);
    }
    for (size_t i = 0; i < gt_l.size(); ++i)
      frame.gts.push_back(make_ground_truth(
          gt_l[i], loaded.has_right ? gt_r[i] : gt_l[i], static_cast<int>(i)));

    const std::string det_file = det_left + "/" + name;
    if (fs::exists(det_file)) {
      const auto det_l = parse_label_file(read_text_file(det_file));
      std::vector<KittiLabelRow> det_r;
      if (loaded.has_right && fs::exists(det_right + "/" + name)) {
        det_r = parse_label_file(read_text_file(det_right + "/" + name));
        if (det_r.size() != det_l.size())
          throw MalformedRow("det row count mismatch between views: " + name);
      }
      for (size_t i = 0; i < det_l.size(); ++i)
        frame.dets.push_back(make_detection(
            det_l[i], i < det_r.size() ? &det_r[i] : nullptr));
    }
    loaded.frames.push_back(std::move(frame));
  }
  return loaded;
}

}  // namespace stereo3d
