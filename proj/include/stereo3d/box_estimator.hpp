#pragma once

#include <array>
#include <optional>
#include <vector>

#include "stereo3d/geometry.hpp"

namespace stereo3d {

// Measurement indices, in the fixed order
// {u_l, v_t, u_r, v_b, u'_l, u'_r, u_p}.
enum MeasurementIndex : int {
  kMeasUL = 0,   // left box, left edge
  kMeasVT = 1,   // left box, top edge
  kMeasUR = 2,   // left box, right edge
  kMeasVB = 3,   // left box, bottom edge
  kMeasURL = 4,  // right box, left edge
  kMeasURR = 5,  // right box, right edge
  kMeasUP = 6,   // perspective keypoint
};
constexpr int kNumMeasurements = 7;

/// The seven normalized measurements extracted from a stereo detection,
/// with a per-measurement validity mask (dropped edges, missing keypoint).
struct MeasurementSet {
  std::array<double, kNumMeasurements> value{};
  std::array<bool, kNumMeasurements> valid{};
  Viewpoint alpha;

  double u_l() const { return value[kMeasUL]; }
  double v_t() const { return value[kMeasVT]; }
  double u_r() const { return value[kMeasUR]; }
  double v_b() const { return value[kMeasVB]; }
  double u_l_right() const { return value[kMeasURL]; }
  double u_r_right() const { return value[kMeasURR]; }
  double u_p() const { return value[kMeasUP]; }
  int count_valid() const;
};

/// For each measurement, the cuboid corner (0..7) whose projection generates
/// it. u-type measurements reference bottom corners 0..3; v_t references a
/// top corner 4..7 and v_b a bottom corner.
struct Correspondence {
  std::array<int, kNumMeasurements> corner{};
  bool keypoint_valid = false;  // false in face-on sectors

  bool operator==(const Correspondence&) const = default;
};

struct SolveOptions {
  double lambda_alpha = 1.0;    // weight of the viewpoint residual
  double lm_lambda0 = 1e-3;     // initial Levenberg damping
  int max_iterations = 50;
  double step_tol = 1e-8;
  double residual_tol = 1e-10;
  double face_band = 0.05;      // half-width of face-on viewpoint sectors, rad
  int max_reinfer = 3;          // re-solves allowed on correspondence change
};

struct SolverReport {
  Box3D solution;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_viewpoint_constraint = false;
  Correspondence correspondence;
};

/// Splits the viewpoint circle into 8 sectors: 4 face-on bands of half-width
/// face_band centered on {0, +-pi/2, pi} where only one cuboid face is seen
/// and the keypoint is unreliable, and 4 corner-on sectors in between. The
/// returned corner assignment is constant throughout the sector containing
/// alpha. Vertical-edge corners assume the object sits below the camera
/// horizon; solve_coarse refines them from the state.
Correspondence infer_correspondence(const Viewpoint& alpha,
                                    double face_band = 0.05);

/// Converts a pixel-space detection into normalized measurements, dropping
/// any 2D box edge within trunc_margin_px of the image border. Throws
/// TooFewMeasurements when fewer than 4 remain.
MeasurementSet extract_measurements(const StereoCamera& camera,
                                    const StereoDetection& det,
                                    double trunc_margin_px = 2.0);

struct PoseState {
  double x = 0.0, y = 0.0, z = 0.0, theta = 0.0;
};

/// Residuals h(state) - z over the valid measurements under corr, with the
/// viewpoint residual appended when the keypoint is unusable. jacobian, when
/// given, receives d(residual)/d(x, y, z, theta) rows. Exposed so the
/// analytic derivatives can be verified externally.
std::vector<double> evaluate_residuals(
    const MeasurementSet& meas, const Dimensions& dims,
    const StereoCamera& camera, const Correspondence& corr,
    const PoseState& state, double lambda_alpha = 1.0,
    std::vector<std::array<double, 4>>* jacobian = nullptr);

/// Solves the object pose {x, y, z, theta} from the sparse measurements by
/// damped Gauss-Newton on the reprojection residuals. Dimensions are inputs
/// and never adjusted. When the keypoint is unavailable the viewpoint
/// residual wrap(alpha - theta - atan2(-x, z)) is appended with weight
/// lambda_alpha. When fixed_depth is given, z is frozen at that value and
/// removed from the parameter vector.
SolverReport solve_coarse(const MeasurementSet& meas, const Dimensions& dims,
                          const StereoCamera& camera,
                          std::optional<double> fixed_depth = std::nullopt,
                          const SolveOptions& opts = {});

}  // namespace stereo3d
