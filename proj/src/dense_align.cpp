#include "stereo3d/dense_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stereo3d {

ValidRoI valid_roi(const StereoCamera& camera, const Box3D& coarse,
                   const ImagePatch& left, const Box2D& left_box,
                   double boundary_left_u, double boundary_right_u) {
  coarse.validate();
  const double u_lo = std::max(boundary_left_u, left_box.u_min);
  const double u_hi = std::min(boundary_right_u, left_box.u_max);

  ValidRoI roi;
  roi.width = left.width;
  roi.height = left.height;
  roi.origin_u = left.origin_u;
  roi.origin_v = left.origin_v;
  roi.mask.assign(static_cast<size_t>(left.width) * left.height, 0);

  if (u_lo < u_hi) {
    for (int r = 0; r < left.height; ++r) {
      const double v = roi.origin_v + r;
      if (v < left_box.v_min || v > left_box.v_max) continue;
      for (int c = 0; c < left.width; ++c) {
        const double u = roi.origin_u + c;
        if (u < u_lo || u >= u_hi) continue;  // half-open on the right
        const Vec3 dir = pixel_ray_direction(camera, u, v);
        const auto hit = intersect_ray_cuboid(coarse, Vec3{}, dir);
        if (hit && hit->point.y >= coarse.y) {
          roi.mask[static_cast<size_t>(r) * roi.width + c] = 1;
          ++roi.count;
        }
      }
    }
  }
  if (roi.count == 0) throw EmptyRoI("no pixels in the valid RoI");
  return roi;
}

std::vector<double> pixel_depth_offsets(const StereoCamera& camera,
                                        const Box3D& coarse, ValidRoI& roi) {
  std::vector<double> dz(roi.mask.size(),
                         std::numeric_limits<double>::quiet_NaN());
  for (int r = 0; r < roi.height; ++r) {
    for (int c = 0; c < roi.width; ++c) {
      const size_t i = static_cast<size_t>(r) * roi.width + c;
      if (!roi.mask[i]) continue;
      const Vec3 dir =
          pixel_ray_direction(camera, roi.origin_u + c, roi.origin_v + r);
      const auto hit = intersect_ray_cuboid(coarse, Vec3{}, dir);
      if (hit) {
        dz[i] = hit->point.z - coarse.z;
      } else {
        roi.mask[i] = 0;
        --roi.count;
      }
    }
  }
  return dz;
}

namespace {

// bilinear sample of the right patch; false when off-patch
inline bool sample_rgb(const ImagePatch& img, double x, double y,
                       double out[3]) {
  if (x < 0.0 || y < 0.0 || x > img.width - 1 || y > img.height - 1)
    return false;
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  x0 = std::min(x0, img.width - 2 < 0 ? 0 : img.width - 2);
  y0 = std::min(y0, img.height - 2 < 0 ? 0 : img.height - 2);
  const double fx = x - x0;
  const double fy = y - y0;
  const float* p00 = img.pixel(y0, x0);
  const float* p01 = img.pixel(y0, std::min(x0 + 1, img.width - 1));
  const float* p10 = img.pixel(std::min(y0 + 1, img.height - 1), x0);
  const float* p11 = img.pixel(std::min(y0 + 1, img.height - 1),
                               std::min(x0 + 1, img.width - 1));
  for (int ch = 0; ch < 3; ++ch) {
    const double top = p00[ch] * (1.0 - fx) + p01[ch] * fx;
    const double bot = p10[ch] * (1.0 - fx) + p11[ch] * fx;
    out[ch] = top * (1.0 - fy) + bot * fy;
  }
  return true;
}

double min_offset(const ValidRoI& roi, const std::vector<double>& dz) {
  double m = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < roi.mask.size(); ++i)
    if (roi.mask[i]) m = std::min(m, dz[i]);
  return m;
}

}  // namespace

double photometric_cost(const ImagePatch& left, const ImagePatch& right,
                        const StereoCamera& camera, const ValidRoI& roi,
                        const std::vector<double>& dz, double z,
                        double oob_penalty) {
  if (roi.count == 0) throw EmptyRoI("empty RoI in photometric cost");
  const double fb = camera.focal_u * camera.baseline;
  double total = 0.0;
  for (int r = 0; r < roi.height; ++r) {
    for (int c = 0; c < roi.width; ++c) {
      const size_t i = static_cast<size_t>(r) * roi.width + c;
      if (!roi.mask[i]) continue;
      const double warp_depth = z + dz[i];
      if (!(warp_depth > 0.0))
        throw NonPositiveWarpDepth("pixel warp depth not positive");
      const double u = roi.origin_u + c;
      const double v = roi.origin_v + r;
      const double xr = u - fb / warp_depth - right.origin_u;
      const double yr = v - right.origin_v;
      double rgb[3];
      if (!sample_rgb(right, xr, yr, rgb)) {
        total += oob_penalty;
        continue;
      }
      const float* lp = left.pixel(r, c);
      for (int ch = 0; ch < 3; ++ch) {
        const double d = lp[ch] - rgb[ch];
        total += d * d;
      }
    }
  }
  return total;
}

namespace {

// one enumeration sweep; returns the index of the cheapest valid candidate
int sweep(const ImagePatch& left, const ImagePatch& right,
          const StereoCamera& camera, const ValidRoI& roi,
          const std::vector<double>& dz, double z_center, int count,
          double step, int stage, double dz_min, const AlignOptions& opts,
          std::vector<CostSample>& curve) {
  const int k_lo = -count / 2;
  std::vector<double> depths;
  depths.reserve(count);
  for (int k = k_lo; k < k_lo + count; ++k) {
    const double z = z_center + k * step;
    if (z + dz_min > 0.0) depths.push_back(z);
  }
  if (depths.empty()) return -1;

  std::vector<double> costs(depths.size());
  const int n = static_cast<int>(depths.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (int i = 0; i < n; ++i)
    costs[i] = photometric_cost(left, right, camera, roi, dz, depths[i],
                                opts.oob_penalty);

  int best = 0;
  const size_t first = curve.size();
  for (int i = 0; i < n; ++i) {
    curve.push_back({stage, depths[i], costs[i]});
    if (costs[i] < costs[best]) best = i;
  }
  return static_cast<int>(first) + best;
}

}  // namespace

AlignmentResult align_depth(const ImagePatch& left, const ImagePatch& right,
                            const StereoCamera& camera, const ValidRoI& roi,
                            const std::vector<double>& dz, double z_init,
                            const AlignOptions& opts) {
  if (roi.count == 0) throw EmptyRoI("empty RoI in depth alignment");
  if (!(z_init > 0.0)) throw InvalidArgument("z_init must be positive");
  const double dz_min = min_offset(roi, dz);

  AlignmentResult result;
  result.pixels_used = roi.count;

  const int best1 =
      sweep(left, right, camera, roi, dz, z_init, opts.stage1_count,
            opts.stage1_step, 1, dz_min, opts, result.curve);
  if (best1 < 0) throw AllCandidatesInvalid("no admissible depth in stage 1");
  const double rough = result.curve[best1].depth;

  const int best2 =
      sweep(left, right, camera, roi, dz, rough, opts.stage2_count,
            opts.stage2_step, 2, dz_min, opts, result.curve);
  if (best2 < 0) throw AllCandidatesInvalid("no admissible depth in stage 2");
  result.depth = result.curve[best2].depth;
  return result;
}

AlignAndRectifyResult align_and_rectify(
    const StereoCamera& camera, const StereoDetection& det,
    const MeasurementSet& meas, const Box3D& coarse, const ImagePatch& left,
    const ImagePatch& right, const AlignOptions& align_opts,
    const SolveOptions& solve_opts, bool skip_alignment) {
  if (skip_alignment) return {coarse, std::nullopt, std::nullopt};

  ValidRoI roi = valid_roi(camera, coarse, left, det.left_box,
                           det.boundary_left, det.boundary_right);
  std::vector<double> dz = pixel_depth_offsets(camera, coarse, roi);
  if (roi.count == 0) throw EmptyRoI("all RoI rays miss the coarse cuboid");

  AlignAndRectifyResult out;
  out.alignment = align_depth(left, right, camera, roi, dz, coarse.z, align_opts);
  const SolverReport rep =
      solve_coarse(meas, Dimensions{coarse.w, coarse.l, coarse.h}, camera,
                   out.alignment->depth, solve_opts);
  out.box = rep.solution;
  out.rectify = rep;
  return out;
}

}  // namespace stereo3d
