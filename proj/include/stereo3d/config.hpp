#pragma once

#include <string>

#include "stereo3d/box_estimator.hpp"
#include "stereo3d/dense_align.hpp"
#include "stereo3d/geometry.hpp"

namespace stereo3d {

/// Runtime tolerances and priors, overridable from a key=value config file.
struct Config {
  // sparse solver
  double lambda_alpha = 1.0;
  double lm_lambda0 = 1e-3;
  int solver_max_iterations = 50;
  double solver_step_tol = 1e-8;
  double solver_residual_tol = 1e-10;
  double face_band = 0.05;
  double trunc_margin_px = 2.0;
  double keypoint_margin = 1e-6;

  // dense alignment
  int align_stage1_count = 50;
  double align_stage1_step = 0.5;
  int align_stage2_count = 20;
  double align_stage2_step = 0.05;
  double oob_penalty = 3.0;

  // priors / codec
  double dim_prior_w = 1.6;
  double dim_prior_l = 3.9;
  double dim_prior_h = 1.56;
  int nms_top_k_train = 2000;
  int nms_top_k_test = 300;

  // evaluation
  int ap_points = 11;  // 11 or 40

  int threads = 0;  // 0 keeps the OpenMP default

  SolveOptions solve_options() const;
  AlignOptions align_options() const;
  Dimensions dimension_prior() const {
    return {dim_prior_w, dim_prior_l, dim_prior_h};
  }
};

/// Parses "key = value" lines ('#' comments allowed). Unknown keys are an
/// error so typos do not pass silently.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

}  // namespace stereo3d
