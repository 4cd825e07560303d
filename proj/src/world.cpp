#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>

#include "mapselect/error.hpp"
#include "mapselect/simeval.hpp"

namespace mapselect {

const char* to_string(TrajectoryShape shape) noexcept {
  switch (shape) {
    case TrajectoryShape::loop: return "loop";
    case TrajectoryShape::figure_eight: return "figure8";
    case TrajectoryShape::corridor: return "corridor";
  }
  return "unknown";
}

std::optional<TrajectoryShape> parse_shape(std::string_view name) {
  if (name == "loop") return TrajectoryShape::loop;
  if (name == "figure8" || name == "figure-eight") return TrajectoryShape::figure_eight;
  if (name == "corridor") return TrajectoryShape::corridor;
  return std::nullopt;
}

namespace {

struct PathSample {
  Vec3 position;
  Vec3 tangent;  // unit, horizontal
};

// Arc-length parametrized ground path.
class Path {
 public:
  Path(TrajectoryShape shape, double length) : shape_(shape), length_(length) {}

  double length() const { return length_; }
  bool closed() const { return shape_ != TrajectoryShape::corridor; }

  PathSample at(double s) const {
    switch (shape_) {
      case TrajectoryShape::loop: {
        const double r = length_ / (2.0 * std::numbers::pi);
        const double a = s / r;
        return {{r * std::cos(a), r * std::sin(a), 0.0}, {-std::sin(a), std::cos(a), 0.0}};
      }
      case TrajectoryShape::figure_eight: {
        // Two circles touching at the origin, traversed in opposite senses.
        const double half = 0.5 * length_;
        const double r = half / (2.0 * std::numbers::pi);
        double u = std::fmod(s, length_);
        if (u < 0) u += length_;
        if (u < half) {
          const double a = u / r;
          return {{r - r * std::cos(a), r * std::sin(a), 0.0}, {std::sin(a), std::cos(a), 0.0}};
        }
        const double a = (u - half) / r;
        return {{-r + r * std::cos(a), r * std::sin(a), 0.0}, {-std::sin(a), std::cos(a), 0.0}};
      }
      case TrajectoryShape::corridor:
        return {{s, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    }
    return {};
  }

 private:
  TrajectoryShape shape_;
  double length_;
};

// World->camera pose for a camera at `centre` looking along `forward` (z),
// with image y pointing down.
SE3 look_along(const Vec3& centre, const Vec3& forward) {
  const Vec3 up = Vec3::UnitZ();
  const Vec3 f = forward.normalized();
  const Vec3 right = f.cross(up).normalized();
  const Vec3 down = f.cross(right);
  Mat3 r_wc;
  r_wc.col(0) = right;
  r_wc.col(1) = down;
  r_wc.col(2) = f;
  SE3 pose;
  pose.rotation = r_wc.transpose();
  pose.translation = -pose.rotation * centre;
  return pose;
}

void check_spec(const WorldSpec& s) {
  auto fail = [](const std::string& msg) { throw Error(Errc::config, "world spec: " + msg); };
  if (s.frames < 2) fail("frames must be >= 2");
  if (s.points_per_frame == 0) fail("points_per_frame must be positive");
  if (!(s.frame_spacing > 0)) fail("frame_spacing must be positive");
  if (!(s.observation_radius > 0)) fail("observation radius must be positive");
  if (!(s.field_of_view_deg > 0 && s.field_of_view_deg < 180)) fail("field of view must be in (0, 180)");
  if (!(s.loop_fraction >= 0 && s.loop_fraction <= 1)) fail("loop fraction must be in [0, 1]");
  if (!(s.mono_fraction >= 0 && s.mono_fraction <= 1)) fail("mono fraction must be in [0, 1]");
  if (!(s.sigma >= 0)) fail("sigma must be >= 0");
  if (!(s.wall_min >= 0 && s.wall_max >= s.wall_min)) fail("wall distances must satisfy 0 <= min <= max");
  if (!(s.wall_height >= 0)) fail("wall height must be >= 0");
  if (!(s.pose_noise_m >= 0 && s.pose_noise_deg >= 0 && s.point_noise_m >= 0)) {
    fail("perturbation magnitudes must be >= 0");
  }
  if (s.image_width <= 0 || s.image_height <= 0) fail("image size must be positive");
  if (!s.camera.valid()) fail("camera intrinsics invalid");
}

std::size_t loop_frame_count(const WorldSpec& s) {
  return static_cast<std::size_t>(std::llround(s.loop_fraction * static_cast<double>(s.frames)));
}

// Cell key of a 2D grid over the ground plane.
std::int64_t cell_key(std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); }

}  // namespace

World generate_world(const WorldSpec& spec) {
  check_spec(spec);
  const std::size_t t = spec.frames;
  const std::size_t n_loop = loop_frame_count(spec);
  if (t - std::min(n_loop, t) < 2) {
    throw Error(Errc::config, "world spec: loop fraction leaves fewer than 2 exploration frames");
  }
  const std::size_t t_explore = t - n_loop;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double deg = std::numbers::pi / 180.0;

  // Trajectory. Closed shapes revisit their start; the corridor goes out and
  // comes back on a parallel lane, and its trailing frames are the loop frames.
  const bool corridor = spec.shape == TrajectoryShape::corridor;
  const std::size_t t_out = corridor ? (t + 1) / 2 : t_explore;
  const Path path(spec.shape, static_cast<double>(t_out) * spec.frame_spacing);

  std::vector<SE3> true_poses(t);
  for (std::size_t j = 0; j < t; ++j) {
    Vec3 centre;
    Vec3 forward;
    if (corridor) {
      if (j < t_out) {
        centre = path.at(static_cast<double>(j) * spec.frame_spacing).position;
        forward = Vec3::UnitX();
      } else {
        const double back = static_cast<double>(t - 1 - j) + 0.5;
        centre = Vec3(back * spec.frame_spacing, 1.0, 0.0);
        forward = -Vec3::UnitX();
      }
    } else {
      // Revisiting frames sit half a spacing off the original keyframes.
      const double s = j < t_explore ? static_cast<double>(j) * spec.frame_spacing
                                     : (static_cast<double>(j - t_explore) + 0.5) * spec.frame_spacing;
      const PathSample ps = path.at(s);
      centre = ps.position;
      forward = ps.tangent;
    }
    const Vec3 lateral = Vec3::UnitZ().cross(forward).normalized();
    centre += 0.1 * gauss(rng) * lateral + 0.05 * gauss(rng) * Vec3::UnitZ();
    const double yaw = 2.0 * deg * gauss(rng);
    forward = so3_exp(yaw * Vec3::UnitZ()) * forward;
    true_poses[j] = look_along(centre, forward);
  }

  // Points on both sides of the path.
  const std::size_t n_scatter = spec.points_per_frame * t;
  const double s_lo = corridor ? -spec.observation_radius : 0.0;
  const double s_hi = corridor ? path.length() + spec.observation_radius : path.length();
  std::vector<Vec3> scattered(n_scatter);
  for (auto& p : scattered) {
    const double s = s_lo + (s_hi - s_lo) * unit(rng);
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double dist = spec.wall_min + (spec.wall_max - spec.wall_min) * unit(rng);
    const double height = spec.wall_height * (2.0 * unit(rng) - 1.0);
    const PathSample ps = path.at(s);
    const Vec3 normal = Vec3::UnitZ().cross(ps.tangent);
    p = ps.position + side * dist * normal + height * Vec3::UnitZ();
    if (corridor) p.y() += 0.5;  // centre the walls between the two lanes
  }

  // Visibility through a ground-plane grid with cell size = radius.
  const double cell = spec.observation_radius;
  auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
  for (std::size_t i = 0; i < n_scatter; ++i) {
    grid[cell_key(cell_of(scattered[i].x()), cell_of(scattered[i].y()))].push_back(i);
  }

  const CameraIntrinsics& cam = spec.camera;
  const double half_fov = 0.5 * spec.field_of_view_deg * deg;
  const double obs_sigma = spec.sigma > 0 ? spec.sigma : 1.0;

  struct RawObs {
    std::size_t point;
    std::size_t frame;
    ObsKind kind;
    Vec3 z;
  };
  std::vector<RawObs> raw;
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < t; ++j) {
    const SE3& pose = true_poses[j];
    const Vec3 centre = -pose.rotation.transpose() * pose.translation;
    candidates.clear();
    const std::int64_t gx = cell_of(centre.x());
    const std::int64_t gy = cell_of(centre.y());
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = grid.find(cell_key(gx + dx, gy + dy));
        if (it != grid.end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
    }
    std::sort(candidates.begin(), candidates.end());
    for (const std::size_t i : candidates) {
      const Vec3 pc = pose * scattered[i];
      if (pc.z() < 0.1 || pc.norm() > spec.observation_radius) continue;
      if (std::abs(std::atan2(pc.x(), pc.z())) > half_fov) continue;
      const double u = cam.fx * pc.x() / pc.z() + cam.cx;
      const double v = cam.fy * pc.y() / pc.z() + cam.cy;
      if (u < 0 || u >= spec.image_width || v < 0 || v >= spec.image_height) continue;
      const double disparity = cam.fx * cam.baseline / pc.z();
      const double ur = u - disparity;
      const bool forced_mono = unit(rng) < spec.mono_fraction;
      const bool stereo = !forced_mono && disparity >= spec.min_disparity_px && ur >= 0;
      Vec3 z(u, v, stereo ? ur : 0.0);
      const double n0 = gauss(rng), n1 = gauss(rng), n2 = gauss(rng);
      z.x() += spec.sigma * n0;
      z.y() += spec.sigma * n1;
      if (stereo) z.z() += spec.sigma * n2;
      raw.push_back({i, j, stereo ? ObsKind::stereo : ObsKind::mono, z});
    }
  }

  // Keep points with at least two observations; renumber in scatter order.
  std::vector<std::size_t> count(n_scatter, 0);
  for (const auto& o : raw) ++count[o.point];
  std::vector<std::int64_t> new_index(n_scatter, -1);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n_scatter; ++i) {
    if (count[i] >= 2) {
      new_index[i] = static_cast<std::int64_t>(kept.size());
      kept.push_back(i);
    }
  }
  if (kept.empty()) throw Error(Errc::data, "world spec produced no point visible from two frames");

  const auto frame_id = [](std::size_t slot) { return static_cast<FrameId>(1001 + slot); };
  const auto point_id = [](std::size_t idx) { return static_cast<PointId>(1 + idx); };

  World world;
  world.truth.poses = true_poses;
  world.truth.points.reserve(kept.size());
  for (const std::size_t i : kept) world.truth.points.push_back(scattered[i]);

  MapData& data = world.data;
  data.camera = cam;
  data.keyframes.resize(t);
  for (std::size_t j = 0; j < t; ++j) {
    Keyframe& kf = data.keyframes[j];
    kf.id = frame_id(j);
    kf.index = static_cast<int>(j) + 1;
    kf.is_loop_frame = j >= t - n_loop;
    if (j == 0) {
      kf.pose = true_poses[j];
    } else {
      Vec6 delta;
      for (int a = 0; a < 3; ++a) delta[a] = spec.pose_noise_m * gauss(rng);
      for (int a = 3; a < 6; ++a) delta[a] = spec.pose_noise_deg * deg * gauss(rng);
      kf.pose = true_poses[j].perturbed(delta);
    }
  }

  data.observations.reserve(raw.size());
  for (const auto& o : raw) {
    if (new_index[o.point] < 0) continue;
    data.observations.push_back({point_id(static_cast<std::size_t>(new_index[o.point])),
                                 frame_id(o.frame), o.kind, o.z, obs_sigma});
  }

  // Perturbed point estimates; fall back to the true position in the rare
  // case the perturbation would put the point behind a stored camera.
  std::vector<std::vector<std::size_t>> frames_of(kept.size());
  for (const auto& o : raw) {
    if (new_index[o.point] >= 0) frames_of[static_cast<std::size_t>(new_index[o.point])].push_back(o.frame);
  }
  data.points.resize(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    Vec3 noise;
    for (int a = 0; a < 3; ++a) noise[a] = spec.point_noise_m * gauss(rng);
    Vec3 estimate = world.truth.points[k] + noise;
    for (const std::size_t f : frames_of[k]) {
      if (transform_point(data.keyframes[f].pose, estimate).z() <= 0.05) {
        estimate = world.truth.points[k];
        break;
      }
    }
    data.points[k] = {point_id(k), estimate};
  }
  return world;
}

}  // namespace mapselect
