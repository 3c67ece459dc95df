#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stereo3d/dense_align.hpp"
#include "stereo3d/geometry.hpp"

// Synthetic stereo scenes with exact geometric ground truth: random cuboids
// whose projections give bit-exact detections (standing in for the network
// heads) and procedurally textured renderings with analytic per-pixel
// disparity for exercising the dense alignment.

namespace stereo3d {

struct SceneSpec {
  uint64_t seed = 1;
  int num_objects = 1;
  double z_min = 5.0, z_max = 50.0;       // center depth range, m
  double theta_min = -kPi, theta_max = kPi;
  double y_min = 0.5, y_max = 1.1;        // vertical center band, m
  Dimensions dim_mean{1.6, 3.9, 1.56};
  double dim_jitter = 0.15;               // relative, uniform
  double texture_frequency = 4.0;         // base texture cycles per meter
  double sigma_disparity_px = 0.0;        // common horizontal shift of the right box
  double sigma_edge_px = 0.0;             // independent per-edge noise
  double sigma_keypoint_bins = 0.0;       // keypoint noise in 1/28 box widths
  // Rejection rules. require_keypoint keeps only corner-on objects whose
  // box-edge corners agree with the viewpoint sector table (all 7
  // measurements usable); sector_margin is the face-on band half-width the
  // check uses.
  bool require_keypoint = true;
  double sector_margin = 0.05;
  bool allow_truncation = false;
};

struct SyntheticObject {
  int id = 0;
  Box3D gt;
  StereoDetection exact;   // bit-exact projection of gt
  StereoDetection noisy;   // exact detection with SceneSpec noise applied
};

/// Deterministic given (spec, camera). Objects do not overlap in BEV and
/// project fully inside both images unless allow_truncation is set.
std::vector<SyntheticObject> generate_scene(const SceneSpec& spec,
                                            const StereoCamera& camera);

struct RenderOptions {
  int supersample = 2;             // NxN subsamples per pixel
  double background_depth = 80.0;  // m
  int margin_px = 4;
  double depth_slack = 3.0;        // m of warp slack the right patch covers
  bool parallel = true;            // OpenMP across rows
};

/// Placement of the left/right patches for one object, derived from the
/// exact detection so that readers and writers agree without side data.
struct PatchLayout {
  int left_u0 = 0, left_v0 = 0, left_w = 0, left_h = 0;
  int right_u0 = 0, right_v0 = 0, right_w = 0, right_h = 0;
};

PatchLayout patch_layout(const StereoDetection& exact, const Box3D& gt,
                         const StereoCamera& camera,
                         const RenderOptions& opts = {});

/// Rasterizes the cuboid with per-face value-noise textures and Lambertian
/// flat shading into both views, background plane at background_depth.
/// Disparity is exact by construction (both views sample the same 3D
/// surface).
std::pair<ImagePatch, ImagePatch> render_stereo(const SyntheticObject& object,
                                                const StereoCamera& camera,
                                                uint64_t texture_seed,
                                                double texture_frequency,
                                                const RenderOptions& opts = {});

/// Line-oriented scene fixture format (version header, camera line, one
/// gt/det_exact/det_noisy triple per object). Serialization is
/// byte-deterministic; values are written with 17 significant digits so a
/// round trip preserves them exactly.
std::string serialize_scene(const StereoCamera& camera,
                            const std::vector<SyntheticObject>& objects);

struct ParsedScene {
  StereoCamera camera;
  std::vector<SyntheticObject> objects;
};

ParsedScene parse_scene(const std::string& text);

/// KITTI-like rectified camera used by the CLI and tests as the default.
StereoCamera make_default_camera();

}  // namespace stereo3d
