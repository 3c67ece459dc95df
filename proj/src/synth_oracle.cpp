#include "stereo3d/synth_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "stereo3d/box_estimator.hpp"
#include "stereo3d/eval_metrics.hpp"

namespace stereo3d {

StereoCamera make_default_camera() {
  StereoCamera cam;
  cam.focal_u = 721.5377;
  cam.focal_v = 721.5377;
  cam.principal_u = 609.5593;
  cam.principal_v = 172.854;
  cam.baseline = 0.54;
  cam.image_width = 1242;
  cam.image_height = 375;
  return cam;
}

namespace {

constexpr double kBorderMarginPx = 3.0;  // keeps all edges clear of truncation

Box2D to_pixel_box(const NormalizedBox2D& n, const StereoCamera& cam) {
  return {cam.pix_u(n.u_l), cam.pix_v(n.v_t), cam.pix_u(n.u_r),
          cam.pix_v(n.v_b)};
}

bool inside_image(const Box2D& b, const StereoCamera& cam) {
  return b.u_min > kBorderMarginPx && b.v_min > kBorderMarginPx &&
         b.u_max < cam.image_width - 1 - kBorderMarginPx &&
         b.v_max < cam.image_height - 1 - kBorderMarginPx;
}

// the box-edge corners the projection actually attains, left and right view
struct HullCorners {
  int left_min, left_max, right_min, right_max;
};

HullCorners hull_corners(const Box3D& box, const StereoCamera& cam) {
  const auto bot = bottom_corners(box);
  HullCorners h{0, 0, 0, 0};
  for (int k = 1; k < 4; ++k) {
    const auto ul = [&](int i) { return bot[i].x / bot[i].z; };
    const auto ur = [&](int i) { return (bot[i].x - cam.baseline) / bot[i].z; };
    if (ul(k) < ul(h.left_min)) h.left_min = k;
    if (ul(k) > ul(h.left_max)) h.left_max = k;
    if (ur(k) < ur(h.right_min)) h.right_min = k;
    if (ur(k) > ur(h.right_max)) h.right_max = k;
  }
  return h;
}

}  // namespace

std::vector<SyntheticObject> generate_scene(const SceneSpec& spec,
                                            const StereoCamera& camera) {
  camera.validate();
  if (!(spec.z_min > 0.0 && spec.z_max >= spec.z_min))
    throw InvalidArgument("depth range must be positive");
  if (spec.sigma_disparity_px < 0 || spec.sigma_edge_px < 0 ||
      spec.sigma_keypoint_bins < 0)
    throw InvalidArgument("noise levels must be non-negative");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
  };

  const double u_lo = camera.norm_u(kBorderMarginPx);
  const double u_hi = camera.norm_u(camera.image_width - 1 - kBorderMarginPx);

  std::vector<SyntheticObject> objects;
  int attempts = 0;
  const int max_attempts = 200000;
  while (static_cast<int>(objects.size()) < spec.num_objects) {
    if (++attempts > max_attempts)
      throw InvalidArgument("scene constraints unsatisfiable");

    const double z = uniform(spec.z_min, spec.z_max);
    const double theta = wrap_angle(uniform(spec.theta_min, spec.theta_max));
    const double jit = spec.dim_jitter;
    const Dimensions dims{spec.dim_mean.w * (1.0 + uniform(-jit, jit)),
                          spec.dim_mean.l * (1.0 + uniform(-jit, jit)),
                          spec.dim_mean.h * (1.0 + uniform(-jit, jit))};
    const double y = uniform(spec.y_min, spec.y_max);

    // horizontal placement: keep the whole footprint inside both views
    const double radius = 0.5 * std::hypot(dims.w, dims.l);
    if (z - radius <= 0.5) continue;
    const double ru = radius / (z - radius);
    const double shift = camera.baseline / (z - radius);
    const double c_lo = u_lo + ru + shift;
    const double c_hi = u_hi - ru;
    if (c_lo >= c_hi) continue;
    const double x = uniform(c_lo, c_hi) * z;

    Box3D gt{x, y, z, theta, dims.w, dims.l, dims.h};
    const ProjectedBox proj = project_box3d(camera, gt);
    const Box2D left = to_pixel_box(proj.left, camera);
    const Box2D right = to_pixel_box(proj.right, camera);

    if (!spec.allow_truncation &&
        (!inside_image(left, camera) || !inside_image(right, camera)))
      continue;

    const Viewpoint alpha = viewpoint_from_pose(gt);
    if (spec.require_keypoint) {
      if (!proj.keypoint_u.has_value()) continue;
      const Correspondence corr =
          infer_correspondence(alpha, spec.sector_margin);
      if (!corr.keypoint_valid) continue;
      const HullCorners h = hull_corners(gt, camera);
      if (h.left_min != corr.corner[kMeasUL] ||
          h.left_max != corr.corner[kMeasUR] ||
          h.right_min != corr.corner[kMeasUL] ||
          h.right_max != corr.corner[kMeasUR] ||
          *proj.keypoint_corner != corr.corner[kMeasUP])
        continue;
      // keep the vertical-edge corner assignment well determined
      if (std::abs(y - 0.5 * dims.h) < 0.02 || y + 0.5 * dims.h < 0.02)
        continue;
    }

    bool overlaps = false;
    for (const auto& other : objects)
      if (iou_bev(gt, other.gt) > 0.0) {
        overlaps = true;
        break;
      }
    if (overlaps) continue;

    SyntheticObject obj;
    obj.id = static_cast<int>(objects.size());
    obj.gt = gt;
    obj.exact.left_box = left;
    obj.exact.right_box = right;
    obj.exact.alpha = alpha;
    if (proj.keypoint_u.has_value())
      obj.exact.keypoint_u = camera.pix_u(*proj.keypoint_u);
    obj.exact.boundary_left = left.u_min;
    obj.exact.boundary_right = left.u_max;

    // noise model: independent edge jitter plus a common disparity shift of
    // the right box; the keypoint jitters in units of box-width/28
    obj.noisy = obj.exact;
    for (int tries = 0; tries < 64; ++tries) {
      StereoDetection n = obj.exact;
      if (spec.sigma_edge_px > 0.0) {
        n.left_box.u_min += spec.sigma_edge_px * gauss(rng);
        n.left_box.v_min += spec.sigma_edge_px * gauss(rng);
        n.left_box.u_max += spec.sigma_edge_px * gauss(rng);
        n.left_box.v_max += spec.sigma_edge_px * gauss(rng);
        n.right_box.u_min += spec.sigma_edge_px * gauss(rng);
        n.right_box.u_max += spec.sigma_edge_px * gauss(rng);
        n.right_box.v_min = n.left_box.v_min;
        n.right_box.v_max = n.left_box.v_max;
      }
      if (spec.sigma_disparity_px > 0.0) {
        const double d = spec.sigma_disparity_px * gauss(rng);
        n.right_box.u_min -= d;
        n.right_box.u_max -= d;
      }
      if (spec.sigma_keypoint_bins > 0.0 && n.keypoint_u.has_value()) {
        const double bin_px = obj.exact.left_box.width() / 28.0;
        n.keypoint_u = *n.keypoint_u +
                       spec.sigma_keypoint_bins * bin_px * gauss(rng);
      }
      n.boundary_left = n.left_box.u_min;
      n.boundary_right = n.left_box.u_max;
      if (n.left_box.valid() && n.right_box.valid()) {
        obj.noisy = n;
        break;
      }
    }
    objects.push_back(std::move(obj));
  }
  return objects;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double lattice_value(uint64_t seed, int64_t ix, int64_t iy) {
  uint64_t h = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(ix) *
                                            0x9E3779B97F4A7C15ull +
                                            static_cast<uint64_t>(iy)));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double value_noise(uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
  const double tx = x - fx, ty = y - fy;
  const double sx = tx * tx * (3.0 - 2.0 * tx);
  const double sy = ty * ty * (3.0 - 2.0 * ty);
  const double v00 = lattice_value(seed, ix, iy);
  const double v01 = lattice_value(seed, ix + 1, iy);
  const double v10 = lattice_value(seed, ix, iy + 1);
  const double v11 = lattice_value(seed, ix + 1, iy + 1);
  const double a = v00 * (1.0 - sx) + v01 * sx;
  const double b = v10 * (1.0 - sx) + v11 * sx;
  return a * (1.0 - sy) + b * sy;
}

double fbm(uint64_t seed, double x, double y) {
  double sum = 0.0, amp = 1.0, norm = 0.0, freq = 1.0;
  for (int o = 0; o < 3; ++o) {
    sum += amp * value_noise(seed + o * 0x632BE59Bull, x * freq, y * freq);
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  return sum / norm;
}

struct FaceShade {
  double tint[3];
  double lambert;
};

FaceShade face_shade(int face, const Box3D& box, uint64_t seed) {
  const double ct = std::cos(box.theta), st = std::sin(box.theta);
  double n[3] = {0, 0, 0};
  switch (face) {
    case 0: n[0] = ct; n[2] = -st; break;   // +w
    case 1: n[0] = -ct; n[2] = st; break;   // -w
    case 2: n[0] = st; n[2] = ct; break;    // +l
    case 3: n[0] = -st; n[2] = -ct; break;  // -l
    case 4: n[1] = -1; break;               // top
    case 5: n[1] = 1; break;                // bottom
  }
  // fixed directional light, from above and slightly camera-left
  static constexpr double kLight[3] = {-0.267261, -0.801784, -0.534522};
  const double diff =
      std::max(0.0, n[0] * kLight[0] + n[1] * kLight[1] + n[2] * kLight[2]);
  FaceShade fs;
  fs.lambert = 0.35 + 0.65 * diff;
  for (int ch = 0; ch < 3; ++ch) {
    const uint64_t h = splitmix64(seed ^ (0x51ED2700ull + face * 31 + ch));
    fs.tint[ch] = 0.55 + 0.45 * (static_cast<double>(h >> 11) *
                                 (1.0 / 9007199254740992.0));
  }
  return fs;
}

// in-face 2D texture coordinates of an object-frame point
void face_uv(int face, const Vec3& p_obj, double& s, double& t) {
  switch (face) {
    case 0: case 1: s = p_obj.z; t = p_obj.y; break;
    case 2: case 3: s = p_obj.x; t = p_obj.y; break;
    default: s = p_obj.x; t = p_obj.z; break;
  }
}

Vec3 to_object_frame(const Box3D& box, const Vec3& p) {
  const double ct = std::cos(box.theta), st = std::sin(box.theta);
  const double dx = p.x - box.x, dz = p.z - box.z;
  return {dx * ct - dz * st, p.y - box.y, dx * st + dz * ct};
}

void shade_sample(const SyntheticObject& object, const StereoCamera& camera,
                  Eye eye, double u, double v, uint64_t seed, double freq,
                  double bg_depth, double out[3]) {
  const Vec3 origin = eye_center(camera, eye);
  const Vec3 dir = pixel_ray_direction(camera, u, v);
  const auto hit = intersect_ray_cuboid(object.gt, origin, dir);
  if (hit) {
    const Vec3 po = to_object_frame(object.gt, hit->point);
    double s, t;
    face_uv(hit->face, po, s, t);
    const double tex =
        0.2 + 0.8 * fbm(seed ^ (0xFACEull + hit->face), s * freq, t * freq);
    const FaceShade fs = face_shade(hit->face, object.gt, seed);
    for (int ch = 0; ch < 3; ++ch)
      out[ch] = std::clamp(tex * fs.tint[ch] * fs.lambert, 0.0, 1.0);
    return;
  }
  // background plane at bg_depth, its own coarser texture
  const double tt = (bg_depth - origin.z) / dir.z;
  const double bx = origin.x + tt * dir.x;
  const double by = origin.y + tt * dir.y;
  const double bg_freq = 0.375 * freq;
  const double tex = fbm(seed ^ 0xB0Bull, bx * bg_freq, by * bg_freq);
  out[0] = 0.15 + 0.35 * tex;
  out[1] = 0.20 + 0.35 * tex;
  out[2] = 0.25 + 0.35 * tex;
}

void render_patch(ImagePatch& img, const SyntheticObject& object,
                  const StereoCamera& camera, Eye eye, uint64_t seed,
                  double freq, const RenderOptions& opts) {
  const int ss = std::max(1, opts.supersample);
  const double inv = 1.0 / (ss * ss);
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double acc[3] = {0, 0, 0};
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double du = (sx + 0.5) / ss - 0.5;
          const double dv = (sy + 0.5) / ss - 0.5;
          double rgb[3];
          shade_sample(object, camera, eye, img.origin_u + c + du,
                       img.origin_v + r + dv, seed, freq,
                       opts.background_depth, rgb);
          for (int ch = 0; ch < 3; ++ch) acc[ch] += rgb[ch];
        }
      }
      float* px = img.pixel(r, c);
      for (int ch = 0; ch < 3; ++ch)
        px[ch] = static_cast<float>(acc[ch] * inv);
    }
  }
}

}  // namespace

PatchLayout patch_layout(const StereoDetection& exact, const Box3D& gt,
                         const StereoCamera& camera,
                         const RenderOptions& opts) {
  const double m = opts.margin_px;
  const double fb = camera.focal_u * camera.baseline;
  const double diag = 0.5 * std::hypot(gt.w, gt.l);
  const double z = gt.z;
  // warp slack so candidates within +-depth_slack of the center depth stay
  // on the right patch
  const double near_z = std::max(z - opts.depth_slack - diag, 1.0);
  const double slack_near = fb / near_z - fb / std::max(z - diag, 1.0);
  const double far_z = z + opts.depth_slack + diag;
  const double slack_far = fb / (z + diag) - fb / far_z;

  PatchLayout lay;
  lay.left_u0 = static_cast<int>(std::floor(exact.left_box.u_min - m));
  lay.left_v0 = static_cast<int>(std::floor(exact.left_box.v_min - m));
  lay.left_w =
      static_cast<int>(std::ceil(exact.left_box.u_max + m)) - lay.left_u0 + 1;
  lay.left_h =
      static_cast<int>(std::ceil(exact.left_box.v_max + m)) - lay.left_v0 + 1;
  lay.right_u0 =
      static_cast<int>(std::floor(exact.right_box.u_min - m - slack_near));
  lay.right_v0 = lay.left_v0;
  lay.right_w =
      static_cast<int>(std::ceil(exact.right_box.u_max + m + slack_far)) -
      lay.right_u0 + 1;
  lay.right_h = lay.left_h;
  return lay;
}

std::pair<ImagePatch, ImagePatch> render_stereo(const SyntheticObject& object,
                                                const StereoCamera& camera,
                                                uint64_t texture_seed,
                                                double texture_frequency,
                                                const RenderOptions& opts) {
  object.gt.validate();
  const PatchLayout lay = patch_layout(object.exact, object.gt, camera, opts);
  ImagePatch left, right;
  left.resize_to(lay.left_w, lay.left_h);
  left.origin_u = lay.left_u0;
  left.origin_v = lay.left_v0;
  right.resize_to(lay.right_w, lay.right_h);
  right.origin_u = lay.right_u0;
  right.origin_v = lay.right_v0;
  render_patch(left, object, camera, Eye::Left, texture_seed,
               texture_frequency, opts);
  render_patch(right, object, camera, Eye::Right, texture_seed,
               texture_frequency, opts);
  return {std::move(left), std::move(right)};
}

// ---------------------------------------------------------------------------
// scene fixture text format

namespace {

void append_detection(std::string& out, const char* tag, int id,
                      const StereoDetection& d) {
  char buf[640];
  std::snprintf(buf, sizeof(buf),
                "%s %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                "%d %.17g %.17g %.17g\n",
                tag, id, d.left_box.u_min, d.left_box.v_min, d.left_box.u_max,
                d.left_box.v_max, d.right_box.u_min, d.right_box.v_min,
                d.right_box.u_max, d.right_box.v_max, d.alpha.alpha,
                d.keypoint_u.has_value() ? 1 : 0,
                d.keypoint_u.value_or(0.0), d.boundary_left, d.boundary_right);
  out += buf;
}

StereoDetection read_detection(std::istringstream& line) {
  StereoDetection d;
  int kp_valid = 0;
  double kp_u = 0.0;
  line >> d.left_box.u_min >> d.left_box.v_min >> d.left_box.u_max >>
      d.left_box.v_max >> d.right_box.u_min >> d.right_box.v_min >>
      d.right_box.u_max >> d.right_box.v_max >> d.alpha.alpha >> kp_valid >>
      kp_u >> d.boundary_left >> d.boundary_right;
  if (!line) throw MalformedRow("bad detection line in scene file");
  if (kp_valid) d.keypoint_u = kp_u;
  return d;
}

}  // namespace

std::string serialize_scene(const StereoCamera& camera,
                            const std::vector<SyntheticObject>& objects) {
  std::string out = "stereo3d_scene 1\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "camera %.17g %.17g %.17g %.17g %.17g %d %d\n",
                camera.focal_u, camera.focal_v, camera.principal_u,
                camera.principal_v, camera.baseline, camera.image_width,
                camera.image_height);
  out += buf;
  std::snprintf(buf, sizeof(buf), "objects %zu\n", objects.size());
  out += buf;
  for (const auto& o : objects) {
    std::snprintf(buf, sizeof(buf),
                  "gt %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", o.id,
                  o.gt.x, o.gt.y, o.gt.z, o.gt.theta, o.gt.w, o.gt.l, o.gt.h);
    out += buf;
    append_detection(out, "det_exact", o.id, o.exact);
    append_detection(out, "det_noisy", o.id, o.noisy);
  }
  return out;
}

ParsedScene parse_scene(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ParsedScene scene;
  int expected = 0;
  bool have_header = false, have_camera = false;
  SyntheticObject current;
  int stage = 0;  // 0: want gt, 1: want det_exact, 2: want det_noisy
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "stereo3d_scene") {
      int version = 0;
      ls >> version;
      if (version != 1) throw MalformedRow("unsupported scene version");
      have_header = true;
    } else if (tag == "camera") {
      ls >> scene.camera.focal_u >> scene.camera.focal_v >>
          scene.camera.principal_u >> scene.camera.principal_v >>
          scene.camera.baseline >> scene.camera.image_width >>
          scene.camera.image_height;
      if (!ls) throw MalformedRow("bad camera line");
      have_camera = true;
    } else if (tag == "objects") {
      ls >> expected;
    } else if (tag == "gt") {
      if (stage != 0) throw MalformedRow("unexpected gt line");
      ls >> current.id >> current.gt.x >> current.gt.y >> current.gt.z >>
          current.gt.theta >> current.gt.w >> current.gt.l >> current.gt.h;
      if (!ls) throw MalformedRow("bad gt line");
      stage = 1;
    } else if (tag == "det_exact") {
      if (stage != 1) throw MalformedRow("unexpected det_exact line");
      int id;
      ls >> id;
      current.exact = read_detection(ls);
      stage = 2;
    } else if (tag == "det_noisy") {
      if (stage != 2) throw MalformedRow("unexpected det_noisy line");
      int id;
      ls >> id;
      current.noisy = read_detection(ls);
      scene.objects.push_back(current);
      stage = 0;
    } else {
      throw MalformedRow("unknown scene tag: " + tag);
    }
  }
  if (!have_header || !have_camera)
    throw MalformedRow("scene file missing header or camera");
  if (stage != 0 || (expected && expected != static_cast<int>(scene.objects.size())))
    throw MalformedRow("scene file truncated");
  return scene;
}

}  // namespace stereo3d
