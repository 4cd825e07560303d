#include <cmath>

#include "mapselect/error.hpp"
#include "mapselect/parallel.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect {

SlamUtility::SlamUtility(const SelectionProblem& problem, const UtilityOptions& options)
    : Utility(problem.num_points()), problem_(problem) {
  const std::size_t t = problem.num_frames();
  if (t == 0) throw Error(Errc::config, "SLAM utility needs at least one keyframe");
  const auto dim = static_cast<Eigen::Index>(6 * t);
  dense_ = problem.prior_epsilon * Eigen::MatrixXd::Identity(dim, dim);
  factor_ = CholFactor::init(dense_);

  if (options.cache_contributions) {
    const std::size_t n = problem.num_points();
    auto cache = std::make_shared<std::vector<std::shared_ptr<const MarginalInfo>>>(n);
    const SlamMap& map = problem.slam_map();
#pragma omp parallel for schedule(dynamic, 16) num_threads(worker_count())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const auto point = static_cast<std::size_t>(i);
      if (map.is_orphan(point)) continue;
      (*cache)[point] =
          std::make_shared<const MarginalInfo>(schur_marginal(point_joint_info(problem, point)));
    }
    cache_ = std::move(cache);
  }
}

std::unique_ptr<Utility> SlamUtility::clone() const { return std::make_unique<SlamUtility>(*this); }

std::shared_ptr<const MarginalInfo> SlamUtility::marginal(std::size_t point) const {
  if (problem_.slam_map().is_orphan(point)) return nullptr;
  if (cache_) return (*cache_)[point];
  return std::make_shared<const MarginalInfo>(schur_marginal(point_joint_info(problem_, point)));
}

double SlamUtility::compute_gain(std::size_t point) const {
  const auto info = marginal(point);
  if (!info) return 0.0;
  return factor_.lemma_gain(info->frames, info->factor);
}

double SlamUtility::apply_commit(std::size_t point) {
  const auto info = marginal(point);
  if (!info) return 0.0;
  const double gain = factor_.lemma_gain(info->frames, info->factor);
  scatter_add(dense_, *info);
  try {
    chol_update(factor_, *info);
  } catch (const Error& e) {
    if (e.code() != Errc::numerical) throw;
    factor_ = CholFactor::init(dense_);
    ++refactorizations_;
  }
  return gain;
}

}  // namespace mapselect
