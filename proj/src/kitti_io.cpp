#include "stereo3d/kitti_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace stereo3d {

namespace {

constexpr double kHalfPi = 0.5 * kPi;

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

double to_double(const std::string& s, int line_no) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MalformedRow("line " + std::to_string(line_no) +
                       ": not a number: " + s);
  }
}

}  // namespace

std::vector<KittiLabelRow> parse_label_file(const std::string& text) {
  std::vector<KittiLabelRow> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 15 && tokens.size() != 16)
      throw MalformedRow("line " + std::to_string(line_no) + ": expected 15 " +
                         "or 16 fields, got " + std::to_string(tokens.size()));
    KittiLabelRow r;
    r.type = tokens[0];
    r.truncated = to_double(tokens[1], line_no);
    r.occluded = static_cast<int>(to_double(tokens[2], line_no));
    r.alpha = to_double(tokens[3], line_no);
    for (int k = 0; k < 4; ++k) r.bbox[k] = to_double(tokens[4 + k], line_no);
    r.height = to_double(tokens[8], line_no);
    r.width = to_double(tokens[9], line_no);
    r.length = to_double(tokens[10], line_no);
    r.x = to_double(tokens[11], line_no);
    r.y = to_double(tokens[12], line_no);
    r.z = to_double(tokens[13], line_no);
    r.rotation_y = to_double(tokens[14], line_no);
    if (tokens.size() == 16) r.score = to_double(tokens[15], line_no);
    for (double v : {r.truncated, r.alpha, r.bbox[0], r.bbox[1], r.bbox[2],
                     r.bbox[3], r.height, r.width, r.length, r.x, r.y, r.z,
                     r.rotation_y, r.score.value_or(0.0)})
      if (!std::isfinite(v))
        throw MalformedRow("line " + std::to_string(line_no) +
                           ": non-finite field");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string serialize_label_rows(const std::vector<KittiLabelRow>& rows) {
  std::string out;
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%s %.6f %d %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f "
                  "%.6f %.6f %.6f",
                  r.type.c_str(), r.truncated, r.occluded, r.alpha, r.bbox[0],
                  r.bbox[1], r.bbox[2], r.bbox[3], r.height, r.width, r.length,
                  r.x, r.y, r.z, r.rotation_y);
    out += buf;
    if (r.score.has_value()) {
      std::snprintf(buf, sizeof(buf), " %.6f", *r.score);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Box3D box3d_from_kitti_row(const KittiLabelRow& row) {
  return Box3D{row.x,           row.y - 0.5 * row.height,
               row.z,           wrap_angle(row.rotation_y + kHalfPi),
               row.width,       row.length,
               row.height};
}

void box3d_to_kitti_row(const Box3D& box, KittiLabelRow& row) {
  row.height = box.h;
  row.width = box.w;
  row.length = box.l;
  row.x = box.x;
  row.y = box.y + 0.5 * box.h;
  row.z = box.z;
  row.rotation_y = wrap_angle(box.theta - kHalfPi);
  row.alpha = wrap_angle(row.rotation_y + azimuth(box.x, box.z));
}

GroundTruthRecord make_ground_truth(const KittiLabelRow& left_row,
                                    const KittiLabelRow& right_row,
                                    int object_id) {
  GroundTruthRecord gt;
  gt.left = {left_row.bbox[0], left_row.bbox[1], left_row.bbox[2],
             left_row.bbox[3]};
  gt.right = {right_row.bbox[0], right_row.bbox[1], right_row.bbox[2],
              right_row.bbox[3]};
  gt.box3d = box3d_from_kitti_row(left_row);
  gt.truncation = left_row.truncated;
  gt.occlusion = left_row.occluded;
  gt.label = left_row.type;
  gt.object_id = object_id;
  return gt;
}

DetectionRecord make_detection(const KittiLabelRow& left_row,
                               const KittiLabelRow* right_row) {
  DetectionRecord det;
  det.left = {left_row.bbox[0], left_row.bbox[1], left_row.bbox[2],
              left_row.bbox[3]};
  if (right_row)
    det.right = Box2D{right_row->bbox[0], right_row->bbox[1],
                      right_row->bbox[2], right_row->bbox[3]};
  // KITTI uses sentinel locations (z <= 0) for 2D-only detections
  if (left_row.z > 0.0 && left_row.height > 0.0 && left_row.width > 0.0 &&
      left_row.length > 0.0)
    det.box3d = box3d_from_kitti_row(left_row);
  det.score = left_row.score.value_or(1.0);
  det.label = left_row.type;
  return det;
}

namespace {

KittiLabelRow base_row(const Box2D& box2d, const std::optional<Box3D>& box3d,
                       const std::string& type) {
  KittiLabelRow row;
  row.type = type;
  row.bbox[0] = box2d.u_min;
  row.bbox[1] = box2d.v_min;
  row.bbox[2] = box2d.u_max;
  row.bbox[3] = box2d.v_max;
  if (box3d.has_value()) {
    box3d_to_kitti_row(*box3d, row);
  } else {
    row.x = row.y = row.z = -1000.0;
    row.rotation_y = -10.0;
    row.alpha = -10.0;
  }
  return row;
}

}  // namespace

KittiLabelRow detection_to_row(const DetectionRecord& det, bool right_view) {
  const Box2D& box =
      right_view && det.right.has_value() ? *det.right : det.left;
  KittiLabelRow row = base_row(box, det.box3d, det.label);
  row.score = det.score;
  return row;
}

KittiLabelRow ground_truth_to_row(const GroundTruthRecord& gt,
                                  bool right_view) {
  KittiLabelRow row =
      base_row(right_view ? gt.right : gt.left, gt.box3d, gt.label);
  row.truncated = gt.truncation;
  row.occluded = gt.occlusion;
  return row;
}

StereoCamera parse_calib(const std::string& text, int image_width,
                         int image_height) {
  std::istringstream in(text);
  std::string line;
  std::optional<std::array<double, 12>> p2, p3;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "P2:" && tag != "P3:") continue;
    std::array<double, 12> m{};
    for (double& v : m)
      if (!(ls >> v)) throw MalformedRow("truncated projection matrix: " + tag);
    (tag == "P2:" ? p2 : p3) = m;
  }
  if (!p2.has_value()) throw MissingMatrix("calib lacks P2");
  if (!p3.has_value()) throw MissingMatrix("calib lacks P3");

  const auto& a = *p2;
  const auto& b = *p3;
  for (int k : {0, 2, 5, 6})
    if (std::abs(a[k] - b[k]) > 1e-3)
      throw NonRectifiedPair("P2/P3 intrinsics differ beyond 1e-3");

  StereoCamera cam;
  cam.focal_u = a[0];
  cam.focal_v = a[5];
  cam.principal_u = a[2];
  cam.principal_v = a[6];
  cam.baseline = (a[3] - b[3]) / a[0];
  cam.image_width = image_width;
  cam.image_height = image_height;
  if (!(cam.baseline > 0.0))
    throw NonRectifiedPair("recovered baseline is not positive");
  cam.validate();
  return cam;
}

std::string serialize_calib(const StereoCamera& camera) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "P2: %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e "
                "%.12e %.12e %.12e\n",
                camera.focal_u, 0.0, camera.principal_u, 0.0, 0.0,
                camera.focal_v, camera.principal_v, 0.0, 0.0, 0.0, 1.0, 0.0);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "P3: %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e "
                "%.12e %.12e %.12e\n",
                camera.focal_u, 0.0, camera.principal_u,
                -camera.focal_u * camera.baseline, 0.0, camera.focal_v,
                camera.principal_v, 0.0, 0.0, 0.0, 1.0, 0.0);
  out += buf;
  return out;
}

}  // namespace stereo3d
