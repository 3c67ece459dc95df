#include "stereo3d/box_estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace stereo3d {

int MeasurementSet::count_valid() const {
  int n = 0;
  for (bool v : valid) n += v ? 1 : 0;
  return n;
}

Correspondence infer_correspondence(const Viewpoint& alpha, double face_band) {
  const double band = std::max(face_band, 1e-12);
  const double a = wrap_angle(alpha.alpha);
  const double half_pi = 0.5 * kPi;

  Correspondence corr;
  int ul, ur, up = -1;
  const long m = std::lround(a / half_pi);
  if (std::abs(a - static_cast<double>(m) * half_pi) <= band) {
    // face-on band around m * pi/2: the two near corners bound the box
    const int mi = static_cast<int>(((m % 4) + 4) % 4);
    ul = mi;
    ur = (mi + 1) & 3;
    corr.keypoint_valid = false;
  } else {
    // corner-on quadrant: the nearest corner projects into the box middle,
    // flanked by its two cycle neighbours at the box edges
    const long q = static_cast<long>(std::floor(a / half_pi));
    const int nearest = static_cast<int>(((q + 1) % 4 + 4) % 4);
    up = nearest;
    ul = (nearest + 3) & 3;
    ur = (nearest + 1) & 3;
    corr.keypoint_valid = true;
  }
  corr.corner[kMeasUL] = ul;
  corr.corner[kMeasUR] = ur;
  corr.corner[kMeasURL] = ul;
  corr.corner[kMeasURR] = ur;
  corr.corner[kMeasUP] = up >= 0 ? up : ul;
  // vertical edges for an object below the camera horizon: the bottom edge
  // comes from the nearest bottom corner, the top edge from the farthest
  // top corner
  const int near = up >= 0 ? up : ul;  // face-on: either near corner works
  corr.corner[kMeasVB] = near;
  corr.corner[kMeasVT] = ((near + 2) & 3) + 4;
  return corr;
}

MeasurementSet extract_measurements(const StereoCamera& camera,
                                    const StereoDetection& det,
                                    double trunc_margin_px) {
  if (!det.left_box.valid() || !det.right_box.valid())
    throw InvalidArgument("detection boxes must be non-degenerate");

  const double u_lo = trunc_margin_px;
  const double u_hi = camera.image_width - 1 - trunc_margin_px;
  const double v_lo = trunc_margin_px;
  const double v_hi = camera.image_height - 1 - trunc_margin_px;

  MeasurementSet m;
  m.alpha = det.alpha;
  m.value[kMeasUL] = camera.norm_u(det.left_box.u_min);
  m.value[kMeasVT] = camera.norm_v(det.left_box.v_min);
  m.value[kMeasUR] = camera.norm_u(det.left_box.u_max);
  m.value[kMeasVB] = camera.norm_v(det.left_box.v_max);
  m.value[kMeasURL] = camera.norm_u(det.right_box.u_min);
  m.value[kMeasURR] = camera.norm_u(det.right_box.u_max);
  m.valid[kMeasUL] = det.left_box.u_min > u_lo;
  m.valid[kMeasVT] = det.left_box.v_min > v_lo;
  m.valid[kMeasUR] = det.left_box.u_max < u_hi;
  m.valid[kMeasVB] = det.left_box.v_max < v_hi;
  m.valid[kMeasURL] = det.right_box.u_min > u_lo;
  m.valid[kMeasURR] = det.right_box.u_max < u_hi;
  if (det.keypoint_u.has_value()) {
    m.value[kMeasUP] = camera.norm_u(*det.keypoint_u);
    m.valid[kMeasUP] = true;
  }
  if (m.count_valid() < 4)
    throw TooFewMeasurements("only " + std::to_string(m.count_valid()) +
                             " of 7 measurements valid");
  return m;
}

namespace {

struct State {
  double x = 0.0, y = 0.0, z = 0.0, theta = 0.0;
};

struct Problem {
  const MeasurementSet& meas;
  Dimensions dims;
  double baseline;
  Correspondence corr;
  bool use_alpha;     // append the viewpoint residual
  double sqrt_lambda_alpha;
  bool fixed_depth;   // z frozen, 3-parameter solve
};

// residuals r = h(state) - z_meas and Jacobian rows in (x, y, z, theta)
void evaluate(const Problem& pb, const State& s, std::vector<double>& r,
              std::vector<std::array<double, 4>>* jac) {
  r.clear();
  if (jac) jac->clear();
  const double ct = std::cos(s.theta), st = std::sin(s.theta);
  const double w2 = 0.5 * pb.dims.w, l2 = 0.5 * pb.dims.l, h2 = 0.5 * pb.dims.h;

  for (int j = 0; j < kNumMeasurements; ++j) {
    if (!pb.meas.valid[j]) continue;
    if (j == kMeasUP && !pb.corr.keypoint_valid) continue;
    const int c = pb.corr.corner[j];
    const double dw = kCornerSignW[c & 3] * w2;
    const double dl = kCornerSignL[c & 3] * l2;
    const double cx = s.x + dw * ct + dl * st;
    const double cz = s.z - dw * st + dl * ct;
    const bool is_v = (j == kMeasVT || j == kMeasVB);
    const bool is_right = (j == kMeasURL || j == kMeasURR);
    if (is_v) {
      const double cy = (c < 4) ? s.y + h2 : s.y - h2;
      r.push_back(cy / cz - pb.meas.value[j]);
      if (jac)
        jac->push_back({0.0, 1.0 / cz, -cy / (cz * cz),
                        cy * (cx - s.x) / (cz * cz)});
    } else {
      const double num = is_right ? cx - pb.baseline : cx;
      r.push_back(num / cz - pb.meas.value[j]);
      if (jac)
        jac->push_back({1.0 / cz, 0.0, -num / (cz * cz),
                        ((cz - s.z) * cz + (cx - s.x) * num) / (cz * cz)});
    }
  }
  if (pb.use_alpha) {
    const double res =
        wrap_angle(s.theta + azimuth(s.x, s.z) - pb.meas.alpha.alpha);
    const double r2 = s.x * s.x + s.z * s.z;
    r.push_back(pb.sqrt_lambda_alpha * res);
    if (jac)
      jac->push_back({pb.sqrt_lambda_alpha * (-s.z / r2), 0.0,
                      pb.sqrt_lambda_alpha * (s.x / r2),
                      pb.sqrt_lambda_alpha});
  }
}

double cost_of(const Problem& pb, const State& s) {
  std::vector<double> r;
  evaluate(pb, s, r, nullptr);
  double c = 0.0;
  for (double v : r) c += v * v;
  return c;
}

// one damped Gauss-Newton solve with a fixed correspondence
SolverReport solve_once(const Problem& pb, State s, const SolveOptions& opts) {
  const int np = pb.fixed_depth ? 3 : 4;
  // parameter k maps to state component param_map[k]
  const int param_map[4] = {0, 1, pb.fixed_depth ? 3 : 2, 3};

  std::vector<double> r;
  std::vector<std::array<double, 4>> jrows;
  evaluate(pb, s, r, &jrows);

  auto assemble = [&](Eigen::MatrixXd& A, Eigen::VectorXd& g) {
    const int n = static_cast<int>(r.size());
    Eigen::MatrixXd J(n, np);
    Eigen::VectorXd rv(n);
    for (int i = 0; i < n; ++i) {
      rv(i) = r[i];
      for (int k = 0; k < np; ++k) J(i, k) = jrows[i][param_map[k]];
    }
    A = J.transpose() * J;
    g = J.transpose() * rv;
  };

  double cost = 0.0;
  for (double v : r) cost += v * v;
  double lambda = opts.lm_lambda0;
  int rejects = 0;
  int iters = 0;
  bool converged = false;

  Eigen::MatrixXd A;
  Eigen::VectorXd g;
  assemble(A, g);

  while (iters < opts.max_iterations) {
    ++iters;
    if (!A.allFinite() || !g.allFinite())
      throw SingularNormalEquations("non-finite normal equations");
    Eigen::MatrixXd Ad = A;
    for (int k = 0; k < np; ++k) Ad(k, k) += lambda;
    Eigen::VectorXd delta = Ad.ldlt().solve(-g);
    if (!delta.allFinite())
      throw SingularNormalEquations("normal equations not solvable");

    State trial = s;
    trial.x += delta(0);
    trial.y += delta(1);
    if (pb.fixed_depth) {
      trial.theta = wrap_angle(trial.theta + delta(2));
    } else {
      trial.z += delta(2);
      trial.theta = wrap_angle(trial.theta + delta(3));
    }
    const double trial_cost = cost_of(pb, trial);

    if (trial_cost < cost) {
      s = trial;
      cost = trial_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
      rejects = 0;
      if (delta.norm() < opts.step_tol || std::sqrt(cost) < opts.residual_tol) {
        converged = true;
        break;
      }
      evaluate(pb, s, r, &jrows);
      assemble(A, g);
    } else {
      lambda *= 10.0;
      if (++rejects >= 5)
        throw DivergedSolve("5 consecutive damped steps rejected");
    }
  }

  SolverReport rep;
  rep.solution = Box3D{s.x, s.y, s.z, wrap_angle(s.theta),
                       pb.dims.w, pb.dims.l, pb.dims.h};
  rep.residual_norm = std::sqrt(cost);
  rep.iterations = iters;
  rep.converged = converged;
  rep.used_viewpoint_constraint = pb.use_alpha;
  rep.correspondence = pb.corr;
  return rep;
}

// picks the vertical-edge corners that actually attain the 2D box top and
// bottom at the given state (depends on the sign of y -+ h/2)
void refine_vertical_corners(Correspondence& corr, const State& s,
                             const Dimensions& dims) {
  const double ct = std::cos(s.theta), st = std::sin(s.theta);
  const double w2 = 0.5 * dims.w, l2 = 0.5 * dims.l, h2 = 0.5 * dims.h;
  double cz[4];
  for (int k = 0; k < 4; ++k) {
    const double dw = kCornerSignW[k] * w2, dl = kCornerSignL[k] * l2;
    cz[k] = s.z - dw * st + dl * ct;
  }
  int top = 0, bottom = 0;
  for (int k = 1; k < 4; ++k) {
    if ((s.y - h2) / cz[k] < (s.y - h2) / cz[top]) top = k;
    if ((s.y + h2) / cz[k] > (s.y + h2) / cz[bottom]) bottom = k;
  }
  corr.corner[kMeasVT] = top + 4;
  corr.corner[kMeasVB] = bottom;
}

State initial_state(const MeasurementSet& m, const StereoCamera& camera,
                    const Viewpoint& alpha, std::optional<double> fixed_depth) {
  State s;
  // depth from the box-center disparity
  double disp_sum = 0.0;
  int disp_n = 0;
  if (m.valid[kMeasUL] && m.valid[kMeasURL]) {
    disp_sum += m.value[kMeasUL] - m.value[kMeasURL];
    ++disp_n;
  }
  if (m.valid[kMeasUR] && m.valid[kMeasURR]) {
    disp_sum += m.value[kMeasUR] - m.value[kMeasURR];
    ++disp_n;
  }
  if (fixed_depth.has_value()) {
    s.z = *fixed_depth;
  } else if (disp_n > 0) {
    const double disp = std::max(disp_sum / disp_n, 1e-6);
    s.z = std::clamp(camera.baseline / disp, 0.5, 200.0);
  } else {
    s.z = 30.0;  // no stereo pair available; any forward depth works
  }
  double u_sum = 0.0;
  int u_n = 0;
  for (int j : {kMeasUL, kMeasUR, kMeasUP}) {
    if (m.valid[j]) {
      u_sum += m.value[j];
      ++u_n;
    }
  }
  double v_sum = 0.0;
  int v_n = 0;
  for (int j : {kMeasVT, kMeasVB}) {
    if (m.valid[j]) {
      v_sum += m.value[j];
      ++v_n;
    }
  }
  s.x = (u_n > 0 ? u_sum / u_n : 0.0) * s.z;
  s.y = (v_n > 0 ? v_sum / v_n : 0.0) * s.z;
  s.theta = wrap_angle(alpha.alpha - azimuth(s.x, s.z));
  return s;
}

int sector_of(double alpha, double face_band) {
  // 0..3: face-on around m*pi/2; 4..7: corner-on quadrants
  const double band = std::max(face_band, 1e-12);
  const double half_pi = 0.5 * kPi;
  const double a = wrap_angle(alpha);
  const long m = std::lround(a / half_pi);
  if (std::abs(a - static_cast<double>(m) * half_pi) <= band)
    return static_cast<int>(((m % 4) + 4) % 4);
  const long q = static_cast<long>(std::floor(a / half_pi));
  return 4 + static_cast<int>(((q % 4) + 4) % 4);
}

}  // namespace

std::vector<double> evaluate_residuals(
    const MeasurementSet& meas, const Dimensions& dims,
    const StereoCamera& camera, const Correspondence& corr,
    const PoseState& state, double lambda_alpha,
    std::vector<std::array<double, 4>>* jacobian) {
  Problem pb{meas,
             dims,
             camera.baseline,
             corr,
             !(meas.valid[kMeasUP] && corr.keypoint_valid),
             std::sqrt(std::max(lambda_alpha, 0.0)),
             false};
  std::vector<double> r;
  evaluate(pb, State{state.x, state.y, state.z, state.theta}, r, jacobian);
  return r;
}

SolverReport solve_coarse(const MeasurementSet& meas, const Dimensions& dims,
                          const StereoCamera& camera,
                          std::optional<double> fixed_depth,
                          const SolveOptions& opts) {
  if (!(dims.w > 0.0 && dims.l > 0.0 && dims.h > 0.0))
    throw InvalidArgument("dimensions must be positive");
  if (meas.count_valid() < 4)
    throw TooFewMeasurements("need at least 4 valid measurements");
  if (meas.valid[kMeasUL] && meas.valid[kMeasUR] &&
      !(meas.value[kMeasUL] < meas.value[kMeasUR]))
    throw InvalidArgument("left box edges out of order");
  if (meas.valid[kMeasURL] && meas.valid[kMeasURR] &&
      !(meas.value[kMeasURL] < meas.value[kMeasURR]))
    throw InvalidArgument("right box edges out of order");

  Problem pb{meas,
             dims,
             camera.baseline,
             infer_correspondence(meas.alpha, opts.face_band),
             false,
             std::sqrt(std::max(opts.lambda_alpha, 0.0)),
             fixed_depth.has_value()};
  pb.use_alpha = !(meas.valid[kMeasUP] && pb.corr.keypoint_valid);

  State s0 = initial_state(meas, camera, meas.alpha, fixed_depth);
  refine_vertical_corners(pb.corr, s0, dims);

  SolverReport rep = solve_once(pb, s0, opts);

  // Re-infer the correspondence at the solution; one re-solve per change.
  for (int pass = 0; pass < opts.max_reinfer; ++pass) {
    const Box3D& b = rep.solution;
    State s{b.x, b.y, b.z, b.theta};
    Correspondence next = pb.corr;
    const double solved_alpha = wrap_angle(b.theta + azimuth(b.x, b.z));
    if (sector_of(solved_alpha, opts.face_band) !=
        sector_of(meas.alpha.alpha, opts.face_band)) {
      next = infer_correspondence(Viewpoint{solved_alpha}, opts.face_band);
    }
    refine_vertical_corners(next, s, dims);
    if (next == pb.corr) break;
    pb.corr = next;
    pb.use_alpha = !(meas.valid[kMeasUP] && pb.corr.keypoint_valid);
    rep = solve_once(pb, s, opts);
  }
  return rep;
}

}  // namespace stereo3d
