// Serial vs OpenMP timing for the data-parallel kernels: cuboid rendering,
// the two-stage photometric depth sweep, and batch coarse solves.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "stereo3d/box_estimator.hpp"
#include "stereo3d/dense_align.hpp"
#include "stereo3d/synth_oracle.hpp"

using namespace stereo3d;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
double best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

}  // namespace

int main() {
  const StereoCamera cam = make_default_camera();
  SceneSpec spec;
  spec.seed = 7;
  spec.z_min = 9.0;
  spec.z_max = 11.0;
  const auto objects = generate_scene(spec, cam);
  const auto& obj = objects[0];

  std::printf("threads available: %d\n\n", omp_get_max_threads());
  std::printf("%-28s %10s %10s %8s\n", "kernel", "serial ms", "omp ms",
              "speedup");

  RenderOptions rser, rpar;
  rser.parallel = false;
  rpar.parallel = true;
  const double render_s =
      best_of(3, [&] { render_stereo(obj, cam, 1, 4.0, rser); });
  const double render_p =
      best_of(3, [&] { render_stereo(obj, cam, 1, 4.0, rpar); });
  std::printf("%-28s %10.2f %10.2f %7.2fx\n", "render_stereo", render_s,
              render_p, render_s / render_p);

  const auto [left, right] = render_stereo(obj, cam, 1, 4.0);
  ValidRoI roi = valid_roi(cam, obj.gt, left, obj.exact.left_box,
                           obj.exact.boundary_left, obj.exact.boundary_right);
  const auto dz = pixel_depth_offsets(cam, obj.gt, roi);
  AlignOptions aser, apar;
  aser.parallel = false;
  apar.parallel = true;
  const double align_s = best_of(
      3, [&] { align_depth(left, right, cam, roi, dz, obj.gt.z - 1.0, aser); });
  const double align_p = best_of(
      3, [&] { align_depth(left, right, cam, roi, dz, obj.gt.z - 1.0, apar); });
  std::printf("%-28s %10.2f %10.2f %7.2fx\n", "align_depth (70 depths)",
              align_s, align_p, align_s / align_p);

  // batch coarse solves, parallel across objects
  std::vector<MeasurementSet> batch;
  std::vector<Dimensions> dims;
  for (uint64_t seed = 1; batch.size() < 512; ++seed) {
    SceneSpec s;
    s.seed = seed;
    const auto objs = generate_scene(s, cam);
    batch.push_back(extract_measurements(cam, objs[0].exact));
    dims.push_back({objs[0].gt.w, objs[0].gt.l, objs[0].gt.h});
  }
  const int n = static_cast<int>(batch.size());
  std::vector<SolverReport> reports(batch.size());
  const double solve_s = best_of(3, [&] {
    for (int i = 0; i < n; ++i)
      reports[i] = solve_coarse(batch[i], dims[i], cam);
  });
  const double solve_p = best_of(3, [&] {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i)
      reports[i] = solve_coarse(batch[i], dims[i], cam);
  });
  std::printf("%-28s %10.2f %10.2f %7.2fx\n", "solve_coarse x512", solve_s,
              solve_p, solve_s / solve_p);
  return 0;
}
