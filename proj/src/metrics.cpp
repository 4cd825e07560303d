#include <Eigen/Geometry>
#include <cmath>

#include "mapselect/error.hpp"
#include "mapselect/simeval.hpp"

namespace mapselect {

namespace {

Vec3 centre(const SE3& world_to_camera) {
  return -world_to_camera.rotation.transpose() * world_to_camera.translation;
}

}  // namespace

double ape(std::span<const SE3> estimated, std::span<const SE3> ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    throw Error(Errc::data, "ape: trajectories differ in length");
  }
  if (estimated.size() < 2) throw Error(Errc::data, "ape: need at least two poses");
  const auto m = static_cast<Eigen::Index>(estimated.size());
  Eigen::Matrix3Xd src(3, m);
  Eigen::Matrix3Xd dst(3, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    src.col(k) = centre(estimated[static_cast<std::size_t>(k)]);
    dst.col(k) = centre(ground_truth[static_cast<std::size_t>(k)]);
  }
  const Eigen::Matrix4d align = Eigen::umeyama(src, dst, false);
  const Eigen::Matrix3Xd aligned =
      (align.topLeftCorner<3, 3>() * src).colwise() + align.topRightCorner<3, 1>();
  return std::sqrt((aligned - dst).colwise().squaredNorm().mean());
}

double rpe(std::span<const SE3> estimated, std::span<const SE3> ground_truth,
           std::size_t delta_frames) {
  if (estimated.size() != ground_truth.size()) {
    throw Error(Errc::data, "rpe: trajectories differ in length");
  }
  if (delta_frames == 0 || delta_frames >= estimated.size()) {
    throw Error(Errc::config, "rpe: delta must be in [1, t)");
  }
  double sum = 0.0;
  const std::size_t count = estimated.size() - delta_frames;
  for (std::size_t j = 0; j < count; ++j) {
    // Camera-to-world poses are the inverses of the stored transforms.
    const SE3 p_rel = estimated[j] * estimated[j + delta_frames].inverse();
    const SE3 q_rel = ground_truth[j] * ground_truth[j + delta_frames].inverse();
    sum += (q_rel.inverse() * p_rel).translation.squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(count));
}

double recall_proxy(const SlamMap& map, std::span<const std::size_t> selected,
                    std::size_t threshold) {
  const auto loops = map.loop_frames();
  if (loops.empty()) throw Error(Errc::config, "recall proxy undefined: map has no loop frames");
  std::vector<char> chosen(map.num_points(), 0);
  for (const std::size_t i : selected) {
    if (i >= chosen.size()) throw Error(Errc::lookup, "recall proxy: point index out of range");
    chosen[i] = 1;
  }
  std::size_t hits = 0;
  for (const std::size_t f : loops) {
    std::size_t covered = 0;
    for (const std::size_t i : map.frame_points(f)) covered += chosen[i];
    if (covered >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(loops.size());
}

}  // namespace mapselect
