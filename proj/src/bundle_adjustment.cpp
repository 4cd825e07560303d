#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mapselect/error.hpp"
#include "mapselect/linalg.hpp"
#include "mapselect/simeval.hpp"

namespace mapselect {

namespace {

// Inverse of SE3::exp.
Vec6 se3_log(const SE3& pose) {
  const Eigen::AngleAxisd aa(pose.rotation);
  const Vec3 omega = aa.angle() * aa.axis();
  const double theta = aa.angle();
  const Mat3 k = skew(omega);
  Mat3 v;
  if (theta < 1e-10) {
    v = Mat3::Identity() + 0.5 * k + k * k / 6.0;
  } else {
    const double t2 = theta * theta;
    v = Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * k +
        (theta - std::sin(theta)) / (t2 * theta) * k * k;
  }
  Vec6 out;
  out.head<3>() = v.inverse() * pose.translation;
  out.tail<3>() = omega;
  return out;
}

struct Problem {
  const SlamMap& map;
  std::vector<std::size_t> points;  // active points
  double prior_weight;
  std::vector<SE3> prior;           // stored poses
};

// Residual z - h and weight of one observation; false if the point is at or
// behind the camera.
bool residual(const SlamMap& map, const Observation& obs, const SE3& pose, const Vec3& point,
              Vec3& r) {
  if (transform_point(pose, point).z() <= kDepthFloor) return false;
  if (obs.kind == ObsKind::stereo) {
    r = obs.measurement - project_stereo(map.camera(), pose, point);
  } else {
    const Vec2 h = project_mono(map.camera(), pose, point);
    r = Vec3(obs.measurement.x() - h.x(), obs.measurement.y() - h.y(), 0.0);
  }
  return true;
}

double total_cost(const Problem& pb, const std::vector<SE3>& poses, const std::vector<Vec3>& points) {
  const SlamMap& map = pb.map;
  double cost = 0.0;
  for (const std::size_t i : pb.points) {
    for (const auto& ref : map.point_observations(i)) {
      const Observation& obs = map.observations()[ref.observation];
      Vec3 r;
      if (!residual(map, obs, poses[ref.frame], points[i], r)) {
        return std::numeric_limits<double>::infinity();
      }
      cost += observation_weight(obs, 1.0) * r.squaredNorm();
    }
  }
  if (pb.prior_weight > 0) {
    for (std::size_t f = 1; f < poses.size(); ++f) {
      cost += pb.prior_weight * se3_log(poses[f] * pb.prior[f].inverse()).squaredNorm();
    }
  }
  return cost;
}

std::string frame_list(const SlamMap& map, const std::vector<std::size_t>& slots) {
  std::ostringstream os;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (k) os << ", ";
    os << map.keyframes()[slots[k]].id;
  }
  return os.str();
}

struct PointBlock {
  Mat3 v_inv;
  Vec3 g;
  std::vector<std::pair<std::size_t, Mat63>> couplings;  // (frame slot, W)
};

}  // namespace

BaResult gauss_newton_ba(const SlamMap& map, std::span<const std::size_t> selected,
                         const BaOptions& options) {
  const std::size_t t = map.num_frames();
  const std::size_t n = map.num_points();
  if (options.max_iters < 0) throw Error(Errc::config, "ba max_iters must be >= 0");
  if (!(options.tol >= 0)) throw Error(Errc::config, "ba tol must be >= 0");
  if (!(options.pose_prior_weight >= 0)) throw Error(Errc::config, "ba pose prior must be >= 0");

  Problem pb{map, {}, options.pose_prior_weight, {}};
  std::vector<char> seen(n, 0);
  for (const std::size_t i : selected) {
    if (i >= n) throw Error(Errc::lookup, "ba: point index " + std::to_string(i) + " out of range");
    if (seen[i]) throw Error(Errc::duplicate, "ba: point selected twice");
    seen[i] = 1;
    const auto refs = map.point_observations(i);
    const bool has_stereo = std::any_of(refs.begin(), refs.end(), [&](const auto& ref) {
      return map.observations()[ref.observation].kind == ObsKind::stereo;
    });
    if (has_stereo || refs.size() >= 2) pb.points.push_back(i);
  }
  std::sort(pb.points.begin(), pb.points.end());

  BaResult out;
  for (const auto& kf : map.keyframes()) out.poses.push_back(kf.pose);
  for (const auto& p : map.points()) out.points.push_back(p.position);
  pb.prior = out.poses;

  // Rows of measurement per frame, for diagnosing rank deficiency.
  std::vector<std::size_t> rows(t, 0);
  for (const std::size_t i : pb.points) {
    for (const auto& ref : map.point_observations(i)) {
      rows[ref.frame] += static_cast<std::size_t>(measurement_dim(map.observations()[ref.observation].kind));
    }
  }
  if (pb.prior_weight == 0.0) {
    std::vector<std::size_t> starved;
    for (std::size_t f = 1; f < t; ++f) {
      if (rows[f] < 6) starved.push_back(f);
    }
    if (!starved.empty()) {
      throw Error(Errc::numerical,
                  "bundle adjustment under-constrained; frames " + frame_list(map, starved));
    }
  }

  double cost = total_cost(pb, out.poses, out.points);
  if (!std::isfinite(cost)) throw Error(Errc::numerical, "bundle adjustment: initial point behind camera");
  out.cost_history.push_back(cost);
  if (t < 2 && pb.points.empty()) return out;

  const Eigen::Index dim = 6 * static_cast<Eigen::Index>(t - 1);
  std::vector<PointBlock> blocks(pb.points.size());

  for (int iter = 0; iter < options.max_iters; ++iter) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    if (pb.prior_weight > 0) {
      s.diagonal().array() += pb.prior_weight;
      for (std::size_t f = 1; f < t; ++f) {
        g.segment<6>(6 * static_cast<Eigen::Index>(f - 1)) -=
            pb.prior_weight * se3_log(out.poses[f] * pb.prior[f].inverse());
      }
    }

    for (std::size_t k = 0; k < pb.points.size(); ++k) {
      const std::size_t i = pb.points[k];
      PointBlock& blk = blocks[k];
      blk.couplings.clear();
      Mat3 v = Mat3::Zero();
      blk.g.setZero();
      for (const auto& ref : map.point_observations(i)) {
        const Observation& obs = map.observations()[ref.observation];
        const SE3& pose = out.poses[ref.frame];
        Vec3 r;
        residual(map, obs, pose, out.points[i], r);
        const auto jac = observation_jacobian(map.camera(), pose, out.points[i], obs.kind);
        const double w = observation_weight(obs, 1.0);
        v += w * jac.point_block.transpose() * jac.point_block;
        blk.g += w * jac.point_block.transpose() * r;
        if (ref.frame == 0) continue;
        const Eigen::Index o = 6 * static_cast<Eigen::Index>(ref.frame - 1);
        s.block<6, 6>(o, o) += w * jac.pose_block.transpose() * jac.pose_block;
        g.segment<6>(o) += w * jac.pose_block.transpose() * r;
        blk.couplings.emplace_back(ref.frame, w * jac.pose_block.transpose() * jac.point_block);
      }
      v.diagonal().array() += default_damping(v);
      blk.v_inv = v.llt().solve(Mat3::Identity());
      for (const auto& [fa, wa] : blk.couplings) {
        const Eigen::Index oa = 6 * static_cast<Eigen::Index>(fa - 1);
        const Mat63 wv = wa * blk.v_inv;
        g.segment<6>(oa) -= wv * blk.g;
        for (const auto& [fb, wb] : blk.couplings) {
          const Eigen::Index ob = 6 * static_cast<Eigen::Index>(fb - 1);
          s.block<6, 6>(oa, ob) -= wv * wb.transpose();
        }
      }
    }

    Eigen::VectorXd dx = Eigen::VectorXd::Zero(dim);
    if (dim > 0) {
      // Jacobi scaling: frames held only by the pose prior sit many orders
      // of magnitude below observed ones without being ill-posed.
      const Eigen::VectorXd diag = s.diagonal();
      const bool positive = (diag.array() > 0.0).all();
      const Eigen::VectorXd scale = positive ? diag.cwiseSqrt().cwiseInverse().eval() : Eigen::VectorXd::Ones(dim);
      const Eigen::MatrixXd scaled = scale.asDiagonal() * s * scale.asDiagonal();
      const Eigen::LLT<Eigen::MatrixXd> llt(scaled);
      if (!positive || llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
        std::vector<std::size_t> order(t - 1);
        std::iota(order.begin(), order.end(), std::size_t{1});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rows[a] < rows[b]; });
        order.resize(std::min<std::size_t>(order.size(), 5));
        throw Error(Errc::numerical,
                    "bundle adjustment normal equations rank-deficient; weakest frames " +
                        frame_list(map, order));
      }
      dx = scale.asDiagonal() * llt.solve(scale.asDiagonal() * g);
    }
    std::vector<Vec3> dl(pb.points.size());
    for (std::size_t k = 0; k < pb.points.size(); ++k) {
      Vec3 rhs = blocks[k].g;
      for (const auto& [f, w] : blocks[k].couplings) {
        rhs -= w.transpose() * dx.segment<6>(6 * static_cast<Eigen::Index>(f - 1));
      }
      dl[k] = blocks[k].v_inv * rhs;
    }

    // Step halving until the cost does not increase.
    double alpha = 1.0;
    bool accepted = false;
    std::vector<SE3> poses;
    std::vector<Vec3> points;
    double trial = cost;
    for (int h = 0; h <= options.max_halvings; ++h, alpha *= 0.5) {
      poses = out.poses;
      points = out.points;
      for (std::size_t f = 1; f < t; ++f) {
        const Vec6 step = alpha * dx.segment<6>(6 * static_cast<Eigen::Index>(f - 1));
        poses[f] = poses[f].perturbed(step);
      }
      for (std::size_t k = 0; k < pb.points.size(); ++k) points[pb.points[k]] += alpha * dl[k];
      trial = total_cost(pb, poses, points);
      if (trial <= cost) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    out.poses = std::move(poses);
    out.points = std::move(points);
    out.cost_history.push_back(trial);
    out.iterations = iter + 1;
    const double decrease = cost - trial;
    cost = trial;
    if (cost == 0.0 || decrease <= options.tol * (cost + decrease)) break;
  }
  return out;
}

}  // namespace mapselect
