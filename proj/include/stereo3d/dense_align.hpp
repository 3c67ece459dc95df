#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stereo3d/box_estimator.hpp"
#include "stereo3d/geometry.hpp"

// Dense photometric refinement of the object center depth. Every pixel of
// the object RoI contributes one squared RGB difference between the left
// image and the disparity-warped right image; the depth relation of each
// pixel to the box center comes from the coarse cuboid and stays fixed
// while the center depth is enumerated.

namespace stereo3d {

/// 3-channel crop with its placement in full-image pixel coordinates.
/// Pixel (r, c) has its center at image coordinates
/// (origin_u + c, origin_v + r); intensities live in [0, 1].
struct ImagePatch {
  int width = 0, height = 0;
  int origin_u = 0, origin_v = 0;
  std::vector<float> data;  // rgb interleaved, row-major

  void resize_to(int w, int h) {
    width = w;
    height = h;
    data.assign(static_cast<size_t>(w) * h * 3, 0.0f);
  }
  float* pixel(int r, int c) {
    return data.data() + (static_cast<size_t>(r) * width + c) * 3;
  }
  const float* pixel(int r, int c) const {
    return data.data() + (static_cast<size_t>(r) * width + c) * 3;
  }
};

/// Per-pixel inclusion mask over the left patch (same geometry).
struct ValidRoI {
  int width = 0, height = 0;
  int origin_u = 0, origin_v = 0;
  std::vector<uint8_t> mask;
  int count = 0;
};

/// Pixels between the boundary keypoints (clamped to the 2D box,
/// half-open on the right) whose viewing ray first hits the coarse cuboid
/// on its bottom half. Throws EmptyRoI when nothing remains.
ValidRoI valid_roi(const StereoCamera& camera, const Box3D& coarse,
                   const ImagePatch& left, const Box2D& left_box,
                   double boundary_left_u, double boundary_right_u);

/// Depth offset of each masked pixel relative to the box center, from exact
/// ray-cuboid intersection. Pixels whose ray misses the cuboid are removed
/// from the mask. Unmasked entries are NaN.
std::vector<double> pixel_depth_offsets(const StereoCamera& camera,
                                        const Box3D& coarse, ValidRoI& roi);

struct AlignOptions {
  int stage1_count = 50;
  double stage1_step = 0.5;   // meters
  int stage2_count = 20;
  double stage2_step = 0.05;  // meters
  double oob_penalty = 3.0;   // squared-RGB cost for pixels warped off-patch
  bool parallel = true;       // OpenMP across candidate depths
};

/// Whole-RoI SSD between the left patch and the right patch warped by the
/// per-pixel disparity focal*b / (z + dz_i). Bilinear sampling on the right;
/// samples falling off the right patch cost oob_penalty each. Throws
/// NonPositiveWarpDepth when z + dz_i <= 0 for a masked pixel.
double photometric_cost(const ImagePatch& left, const ImagePatch& right,
                        const StereoCamera& camera, const ValidRoI& roi,
                        const std::vector<double>& dz, double z,
                        double oob_penalty = 3.0);

struct CostSample {
  int stage = 0;      // 1 = coarse sweep, 2 = fine sweep
  double depth = 0.0;
  double cost = 0.0;
};

struct AlignmentResult {
  double depth = 0.0;
  std::vector<CostSample> curve;
  int pixels_used = 0;
};

/// Two-stage depth enumeration: stage 1 sweeps stage1_count depths spaced
/// stage1_step around z_init (k in [-n/2, n/2)), stage 2 sweeps
/// stage2_count depths spaced stage2_step around the stage-1 argmin.
/// Candidates violating z + dz_i > 0 are skipped.
AlignmentResult align_depth(const ImagePatch& left, const ImagePatch& right,
                            const StereoCamera& camera, const ValidRoI& roi,
                            const std::vector<double>& dz, double z_init,
                            const AlignOptions& opts = {});

struct AlignAndRectifyResult {
  Box3D box;
  std::optional<AlignmentResult> alignment;
  std::optional<SolverReport> rectify;
};

/// Full refinement: build the valid RoI from the detection, align the depth
/// starting at the coarse z, then re-solve the sparse problem with the depth
/// frozen at the aligned value. skip_alignment returns the coarse box
/// untouched.
AlignAndRectifyResult align_and_rectify(
    const StereoCamera& camera, const StereoDetection& det,
    const MeasurementSet& meas, const Box3D& coarse, const ImagePatch& left,
    const ImagePatch& right, const AlignOptions& align_opts = {},
    const SolveOptions& solve_opts = {}, bool skip_alignment = false);

}  // namespace stereo3d
