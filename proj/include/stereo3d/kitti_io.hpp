#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stereo3d/eval_metrics.hpp"
#include "stereo3d/geometry.hpp"

// KITTI object label and calibration text formats. Label rows have 15
// whitespace-separated fields (ground truth) or 16 (detections, trailing
// score). Locations are bottom-face centers and rotation_y puts the heading
// along camera x at zero; both are converted to the library's center /
// forward-heading convention on ingest.

namespace stereo3d {

struct KittiLabelRow {
  std::string type = "Car";
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  double bbox[4] = {0, 0, 0, 0};  // left, top, right, bottom (pixels)
  double height = 0.0, width = 0.0, length = 0.0;  // KITTI dims order: h w l
  double x = 0.0, y = 0.0, z = 0.0;  // bottom-face center, camera frame
  double rotation_y = 0.0;
  std::optional<double> score;
};

/// Throws MalformedRow with the 1-based line number on bad input.
std::vector<KittiLabelRow> parse_label_file(const std::string& text);

/// Numeric fields are written with %.6f (the documented round-trip precision).
std::string serialize_label_rows(const std::vector<KittiLabelRow>& rows);

/// rotation_y -> yaw and bottom-center -> center conversions.
Box3D box3d_from_kitti_row(const KittiLabelRow& row);
void box3d_to_kitti_row(const Box3D& box, KittiLabelRow& row);

GroundTruthRecord make_ground_truth(const KittiLabelRow& left_row,
                                    const KittiLabelRow& right_row,
                                    int object_id);
/// right_row may be null (monocular detections).
DetectionRecord make_detection(const KittiLabelRow& left_row,
                               const KittiLabelRow* right_row);

KittiLabelRow detection_to_row(const DetectionRecord& det, bool right_view);
KittiLabelRow ground_truth_to_row(const GroundTruthRecord& gt, bool right_view);

/// Reads the P2/P3 projection matrices of a KITTI calib file. The baseline
/// is (P2[0,3] - P3[0,3]) / focal. Throws MissingMatrix / NonRectifiedPair.
StereoCamera parse_calib(const std::string& text, int image_width = 1242,
                         int image_height = 375);
std::string serialize_calib(const StereoCamera& camera);

}  // namespace stereo3d
