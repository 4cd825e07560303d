#include "fixtures.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "mapselect/linalg.hpp"

namespace mapselect::testing {

std::shared_ptr<const SlamMap> random_map(std::mt19937_64& rng, const RandomMapOptions& o) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  MapData data;
  data.camera = {400.0, 400.0, 320.0, 240.0, 0.2};
  for (std::size_t j = 0; j < o.frames; ++j) {
    Keyframe kf;
    kf.id = static_cast<FrameId>(10 + 3 * j);
    kf.index = static_cast<int>(j) + 1;
    Vec6 twist;
    twist << 0.5 * static_cast<double>(j) + 0.1 * u(rng), 0.2 * u(rng), 0.2 * u(rng),
        0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng);
    // Camera centre moves along +x: world->camera translation is minus it.
    SE3 c2w = SE3::exp(twist);
    kf.pose = c2w.inverse();
    kf.is_loop_frame = j + 1 == o.frames || unit(rng) < o.loop_probability;
    data.keyframes.push_back(kf);
  }
  // Shuffle storage order so indexing does not depend on input order.
  std::shuffle(data.keyframes.begin(), data.keyframes.end(), rng);

  const double span = 0.5 * static_cast<double>(o.frames);
  for (std::size_t i = 0; i < o.points; ++i) {
    MapPoint p;
    p.id = static_cast<PointId>(100 + 7 * i);
    p.position = Vec3(span * 0.5 + (span * 0.5 + 1.5) * u(rng), 1.0 * u(rng), 6.0 + 2.0 * u(rng));
    data.points.push_back(p);
  }

  for (const auto& p : data.points) {
    std::vector<const Keyframe*> seen;
    for (const auto& kf : data.keyframes) {
      if (unit(rng) < o.observe_probability) seen.push_back(&kf);
    }
    if (seen.empty() && !o.allow_orphans) seen.push_back(&data.keyframes[rng() % data.keyframes.size()]);
    for (const Keyframe* kf : seen) {
      Observation ob;
      ob.point_id = p.id;
      ob.frame_id = kf->id;
      ob.kind = unit(rng) < o.mono_probability ? ObsKind::mono : ObsKind::stereo;
      ob.sigma = o.sigma * (0.5 + unit(rng));
      const Vec3 z = project_stereo(data.camera, kf->pose, p.position);
      ob.measurement = z + Vec3(gauss(rng), gauss(rng), gauss(rng));
      if (ob.kind == ObsKind::mono) ob.measurement.z() = 0.0;
      data.observations.push_back(ob);
    }
  }
  std::shuffle(data.points.begin(), data.points.end(), rng);
  std::shuffle(data.observations.begin(), data.observations.end(), rng);
  return std::make_shared<const SlamMap>(SlamMap::build(std::move(data)));
}

std::vector<std::size_t> random_subset(std::mt19937_64& rng, std::size_t n, std::size_t size) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(size, n));
  std::sort(all.begin(), all.end());
  return all;
}

namespace {

struct JacobianRows {
  Eigen::MatrixXd pose;   // dim x 6, sqrt-weighted
  Eigen::MatrixXd point;  // dim x 3, sqrt-weighted
};

JacobianRows rows(const SelectionProblem& problem, const SlamMap::ObsRef& ref, std::size_t point) {
  const SlamMap& map = problem.slam_map();
  const Observation& obs = map.observations()[ref.observation];
  const auto jac = observation_jacobian(map.camera(), map.keyframes()[ref.frame].pose,
                                        map.points()[point].position, obs.kind);
  const double s = 1.0 / (obs.sigma * problem.noise_scale);
  return {s * jac.pose_block.topRows(jac.meas_dim), s * jac.point_block.topRows(jac.meas_dim)};
}

double damping_for(const Eigen::Matrix3d& p) { return 1e-9 * p.trace() / 3.0; }

double logdet_lu(const Eigen::MatrixXd& m) {
  // Independent of the library's Cholesky path.
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd u = lu.matrixLU();
  double sum = 0.0;
  for (Eigen::Index k = 0; k < u.rows(); ++k) sum += std::log(std::abs(u(k, k)));
  return sum;
}

}  // namespace

double dense_slam_oracle(const SelectionProblem& problem, const std::vector<std::size_t>& points) {
  const SlamMap& map = problem.slam_map();
  const auto t = static_cast<Eigen::Index>(map.num_frames());
  std::vector<std::size_t> active;
  for (const std::size_t i : points) {
    if (!map.is_orphan(i)) active.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(6 * t + 3 * m, 6 * t + 3 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index col = 6 * t + 3 * k;
    for (const auto& ref : map.point_observations(active[static_cast<std::size_t>(k)])) {
      const auto r = rows(problem, ref, active[static_cast<std::size_t>(k)]);
      const Eigen::Index f = 6 * static_cast<Eigen::Index>(ref.frame);
      joint.block(f, f, 6, 6) += r.pose.transpose() * r.pose;
      joint.block(f, col, 6, 3) += r.pose.transpose() * r.point;
      joint.block(col, f, 3, 6) += r.point.transpose() * r.pose;
      joint.block(col, col, 3, 3) += r.point.transpose() * r.point;
    }
    const Eigen::Matrix3d p = joint.block(col, col, 3, 3);
    joint.block(col, col, 3, 3) += damping_for(p) * Eigen::Matrix3d::Identity();
  }
  // log det of the pose marginal = log det(joint) - log det(point part); the
  // point part is block diagonal.
  joint.topLeftCorner(6 * t, 6 * t) += problem.prior_epsilon * Eigen::MatrixXd::Identity(6 * t, 6 * t);
  double points_logdet = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) points_logdet += logdet_lu(joint.block(6 * t + 3 * k, 6 * t + 3 * k, 3, 3));
  return logdet_lu(joint) - points_logdet - 6.0 * static_cast<double>(t) * std::log(problem.prior_epsilon);
}

double dense_local_oracle(const SelectionProblem& problem, const std::vector<std::size_t>& points) {
  const SlamMap& map = problem.slam_map();
  std::vector<Eigen::MatrixXd> info(map.num_frames(), problem.prior_epsilon * Eigen::MatrixXd::Identity(6, 6));
  for (const std::size_t i : points) {
    for (const auto& ref : map.point_observations(i)) {
      const auto r = rows(problem, ref, i);
      info[ref.frame] += r.pose.transpose() * r.pose;
    }
  }
  double total = 0.0;
  for (const auto& m : info) total += logdet_lu(m) - 6.0 * std::log(problem.prior_epsilon);
  return total;
}

double dense_odom_oracle(const SelectionProblem& problem, const std::vector<std::size_t>& points) {
  const SlamMap& map = problem.slam_map();
  const std::size_t t = map.num_frames();

  // Brute-force pairing: most shared points with an earlier frame, ties to the earliest.
  auto shared = [&](std::size_t a, std::size_t b) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < map.num_points(); ++i) {
      bool in_a = false, in_b = false;
      for (const auto& ref : map.point_observations(i)) {
        in_a |= ref.frame == a;
        in_b |= ref.frame == b;
      }
      count += in_a && in_b;
    }
    return count;
  };

  double total = 0.0;
  for (std::size_t j = 1; j < t; ++j) {
    std::size_t best = 0, best_count = 0;
    for (std::size_t p = 0; p < j; ++p) {
      const std::size_t c = shared(j, p);
      if (c > best_count) {
        best_count = c;
        best = p;
      }
    }
    if (best_count == 0) continue;

    // Points stereo-observed in both frames.
    std::vector<std::pair<std::size_t, std::pair<SlamMap::ObsRef, SlamMap::ObsRef>>> both;
    for (const std::size_t i : points) {
      const SlamMap::ObsRef* rj = nullptr;
      const SlamMap::ObsRef* rp = nullptr;
      for (const auto& ref : map.point_observations(i)) {
        if (map.observations()[ref.observation].kind != ObsKind::stereo) continue;
        if (ref.frame == j) rj = &ref;
        if (ref.frame == best) rp = &ref;
      }
      if (rj && rp) both.push_back({i, {*rj, *rp}});
    }
    const auto m = static_cast<Eigen::Index>(both.size());
    // Conditioning on x_p drops its columns; its rows still constrain the points.
    // Order: x_j (0..5), then points.
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(6 + 3 * m, 6 + 3 * m);
    joint.topLeftCorner(6, 6) = problem.prior_epsilon * Eigen::MatrixXd::Identity(6, 6);
    double points_logdet = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& [i, refs] = both[static_cast<std::size_t>(k)];
      const Eigen::Index col = 6 + 3 * k;
      const auto rj = rows(problem, refs.first, i);
      const auto rp = rows(problem, refs.second, i);
      joint.topLeftCorner(6, 6) += rj.pose.transpose() * rj.pose;
      joint.block(0, col, 6, 3) += rj.pose.transpose() * rj.point;
      joint.block(col, 0, 3, 6) += rj.point.transpose() * rj.pose;
      Eigen::Matrix3d p = rj.point.transpose() * rj.point + rp.point.transpose() * rp.point;
      p += damping_for(p) * Eigen::Matrix3d::Identity();
      joint.block(col, col, 3, 3) = p;
      points_logdet += logdet_lu(p);
    }
    total += logdet_lu(joint) - points_logdet - 6.0 * std::log(problem.prior_epsilon);
  }
  return total;
}

double dense_cover_oracle(const SlamMap& map, const std::vector<std::size_t>& points, std::size_t b_cover) {
  std::vector<char> chosen(map.num_points(), 0);
  for (const std::size_t i : points) chosen[i] = 1;
  double sum = 0.0;
  std::size_t loops = 0;
  for (std::size_t j = 0; j < map.num_frames(); ++j) {
    if (!map.keyframes()[j].is_loop_frame) continue;
    ++loops;
    std::size_t c = 0;
    for (std::size_t i = 0; i < map.num_points(); ++i) {
      if (!chosen[i]) continue;
      for (const auto& ref : map.point_observations(i)) c += ref.frame == j;
    }
    sum += static_cast<double>(std::min(c, b_cover));
  }
  return sum / static_cast<double>(loops);
}

ModularUtility::ModularUtility(std::vector<double> weights)
    : Utility(weights.size()), weights_(std::move(weights)) {}

double value_of(UtilityKind kind, const SelectionProblem& problem, const std::vector<std::size_t>& points,
                const UtilityOptions& options) {
  auto state = make_utility(kind, problem, options);
  for (const std::size_t i : points) state->commit(i);
  return state->value();
}

}  // namespace mapselect::testing
