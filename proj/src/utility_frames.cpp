#include <cmath>

#include "mapselect/error.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect {

FrameBlockUtility::FrameBlockUtility(const SelectionProblem& problem,
                                     const UtilityOptions& options)
    : Utility(problem.num_points()), problem_(problem), options_(options) {
  if (problem.num_frames() == 0) throw Error(Errc::config, "utility needs at least one keyframe");
}

void FrameBlockUtility::initialise(const std::vector<char>& active_frames) {
  const std::size_t t = problem_.num_frames();
  const Mat6 prior = problem_.prior_epsilon * Mat6::Identity();
  frames_.assign(t, prior);
  frame_logdet_.assign(t, 6.0 * std::log(problem_.prior_epsilon));
  for (std::size_t j = 0; j < t; ++j) {
    if (!active_frames[j]) frame_logdet_[j] = std::nan("");
  }

  if (!options_.cache_contributions) return;
  const std::size_t n = problem_.num_points();
  std::vector<std::vector<Term>> per_point(n);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    point_terms(static_cast<std::size_t>(i), per_point[static_cast<std::size_t>(i)]);
  }
  auto offsets = std::make_shared<std::vector<std::size_t>>(n + 1, 0);
  auto terms = std::make_shared<std::vector<Term>>();
  std::size_t total = 0;
  for (const auto& v : per_point) total += v.size();
  terms->reserve(total);
  for (std::size_t i = 0; i < n; ++i) {
    terms->insert(terms->end(), per_point[i].begin(), per_point[i].end());
    (*offsets)[i + 1] = terms->size();
    std::vector<Term>().swap(per_point[i]);
  }
  term_offsets_ = std::move(offsets);
  terms_ = std::move(terms);
}

const std::vector<FrameBlockUtility::Term>& FrameBlockUtility::terms_for(
    std::size_t point, std::vector<Term>& scratch) const {
  scratch.clear();
  if (terms_) {
    const auto begin = terms_->begin() + static_cast<std::ptrdiff_t>((*term_offsets_)[point]);
    const auto end = terms_->begin() + static_cast<std::ptrdiff_t>((*term_offsets_)[point + 1]);
    scratch.assign(begin, end);
  } else {
    point_terms(point, scratch);
  }
  return scratch;
}

double FrameBlockUtility::gain_of(const std::vector<Term>& terms) const {
  double gain = 0.0;
  for (const auto& term : terms) {
    gain += logdet6(frames_[term.frame] + term.info) - frame_logdet_[term.frame];
  }
  return gain;
}

double FrameBlockUtility::compute_gain(std::size_t point) const {
  if (terms_) {
    // Cached path: iterate in place without copying.
    double gain = 0.0;
    for (std::size_t k = (*term_offsets_)[point]; k < (*term_offsets_)[point + 1]; ++k) {
      const Term& term = (*terms_)[k];
      gain += logdet6(frames_[term.frame] + term.info) - frame_logdet_[term.frame];
    }
    return gain;
  }
  std::vector<Term> scratch;
  return gain_of(terms_for(point, scratch));
}

double FrameBlockUtility::apply_commit(std::size_t point) {
  std::vector<Term> scratch;
  const auto& terms = terms_for(point, scratch);
  double gain = 0.0;
  for (const auto& term : terms) {
    const Mat6 updated = frames_[term.frame] + term.info;
    const double ld = logdet6(updated);
    gain += ld - frame_logdet_[term.frame];
    frames_[term.frame] = updated;
    frame_logdet_[term.frame] = ld;
  }
  return gain;
}

LocalUtility::LocalUtility(const SelectionProblem& problem, const UtilityOptions& options)
    : FrameBlockUtility(problem, options) {
  initialise(std::vector<char>(problem.num_frames(), 1));
}

std::unique_ptr<Utility> LocalUtility::clone() const {
  return std::make_unique<LocalUtility>(*this);
}

void LocalUtility::point_terms(std::size_t point, std::vector<Term>& out) const {
  const SlamMap& map = problem_.slam_map();
  const Vec3& position = map.points()[point].position;
  for (const auto& ref : map.point_observations(point)) {
    const Observation& obs = map.observations()[ref.observation];
    const auto jac =
        observation_jacobian(map.camera(), map.keyframes()[ref.frame].pose, position, obs.kind);
    const double w = observation_weight(obs, problem_.noise_scale);
    const auto a = jac.pose_block.topRows(jac.meas_dim);
    out.push_back({ref.frame, w * a.transpose() * a});
  }
}

OdomUtility::OdomUtility(const SelectionProblem& problem, const UtilityOptions& options)
    : FrameBlockUtility(problem, options),
      pairs_(std::make_shared<const std::vector<std::optional<std::size_t>>>(
          pairing(problem.slam_map()))) {
  std::vector<char> active(problem.num_frames(), 0);
  for (std::size_t j = 0; j < active.size(); ++j) active[j] = (*pairs_)[j].has_value();
  initialise(active);
}

std::unique_ptr<Utility> OdomUtility::clone() const { return std::make_unique<OdomUtility>(*this); }

void OdomUtility::point_terms(std::size_t point, std::vector<Term>& out) const {
  const SlamMap& map = problem_.slam_map();
  const auto refs = map.point_observations(point);
  const Vec3& position = map.points()[point].position;

  auto stereo_obs = [&](std::size_t frame) -> const Observation* {
    for (const auto& ref : refs) {
      if (ref.frame == frame) {
        const Observation& obs = map.observations()[ref.observation];
        return obs.kind == ObsKind::stereo ? &obs : nullptr;
      }
      if (ref.frame > frame) break;
    }
    return nullptr;
  };

  for (const auto& ref : refs) {
    const auto& pair = (*pairs_)[ref.frame];
    if (!pair) continue;
    const Observation& obs_j = map.observations()[ref.observation];
    if (obs_j.kind != ObsKind::stereo) continue;
    const Observation* obs_p = stereo_obs(*pair);
    if (!obs_p) continue;

    const auto jac_j = observation_jacobian(map.camera(), map.keyframes()[ref.frame].pose,
                                            position, ObsKind::stereo);
    const auto jac_p = observation_jacobian(map.camera(), map.keyframes()[*pair].pose, position,
                                            ObsKind::stereo);
    const double sj = std::sqrt(observation_weight(obs_j, problem_.noise_scale));
    const double sp = std::sqrt(observation_weight(*obs_p, problem_.noise_scale));

    // Pair problem over (x_j, m_i) conditioned on x_{p_j}: the rows of frame
    // p_j constrain only the point, then the point is marginalized.
    Eigen::Matrix<double, 6, 6> pose_rows = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 3> point_rows;
    pose_rows.topRows<3>() = sj * jac_j.pose_block;
    point_rows.topRows<3>() = sj * jac_j.point_block;
    point_rows.bottomRows<3>() = sp * jac_p.point_block;
    const Mat3 p = point_rows.transpose() * point_rows;
    const Eigen::MatrixXd g = schur_factor(pose_rows, point_rows, default_damping(p));
    Mat6 info = g * g.transpose();
    info = 0.5 * (info + info.transpose()).eval();
    out.push_back({ref.frame, info});
  }
}

}  // namespace mapselect
