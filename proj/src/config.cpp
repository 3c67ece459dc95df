#include "stereo3d/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stereo3d {

SolveOptions Config::solve_options() const {
  SolveOptions o;
  o.lambda_alpha = lambda_alpha;
  o.lm_lambda0 = lm_lambda0;
  o.max_iterations = solver_max_iterations;
  o.step_tol = solver_step_tol;
  o.residual_tol = solver_residual_tol;
  o.face_band = face_band;
  return o;
}

AlignOptions Config::align_options() const {
  AlignOptions o;
  o.stage1_count = align_stage1_count;
  o.stage1_step = align_stage1_step;
  o.stage2_count = align_stage2_count;
  o.stage2_step = align_stage2_step;
  o.oob_penalty = oob_penalty;
  return o;
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  const auto dbl = [](double& field) {
    return [&field](const std::string& v) { field = std::stod(v); };
  };
  const auto intv = [](int& field) {
    return [&field](const std::string& v) { field = std::stoi(v); };
  };
  setters["lambda_alpha"] = dbl(cfg.lambda_alpha);
  setters["lm_lambda0"] = dbl(cfg.lm_lambda0);
  setters["solver_max_iterations"] = intv(cfg.solver_max_iterations);
  setters["solver_step_tol"] = dbl(cfg.solver_step_tol);
  setters["solver_residual_tol"] = dbl(cfg.solver_residual_tol);
  setters["face_band"] = dbl(cfg.face_band);
  setters["trunc_margin_px"] = dbl(cfg.trunc_margin_px);
  setters["keypoint_margin"] = dbl(cfg.keypoint_margin);
  setters["align_stage1_count"] = intv(cfg.align_stage1_count);
  setters["align_stage1_step"] = dbl(cfg.align_stage1_step);
  setters["align_stage2_count"] = intv(cfg.align_stage2_count);
  setters["align_stage2_step"] = dbl(cfg.align_stage2_step);
  setters["oob_penalty"] = dbl(cfg.oob_penalty);
  setters["dim_prior_w"] = dbl(cfg.dim_prior_w);
  setters["dim_prior_l"] = dbl(cfg.dim_prior_l);
  setters["dim_prior_h"] = dbl(cfg.dim_prior_h);
  setters["nms_top_k_train"] = intv(cfg.nms_top_k_train);
  setters["nms_top_k_test"] = intv(cfg.nms_top_k_test);
  setters["ap_points"] = intv(cfg.ap_points);
  setters["threads"] = intv(cfg.threads);

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw InvalidArgument("config line " + std::to_string(line_no) +
                              ": expected key=value");
      continue;
    }
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw InvalidArgument("config line " + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const std::exception&) {
      throw InvalidArgument("config line " + std::to_string(line_no) +
                            ": bad value for '" + key + "'");
    }
  }
  if (cfg.ap_points != 11 && cfg.ap_points != 40)
    throw InvalidArgument("ap_points must be 11 or 40");
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace stereo3d
