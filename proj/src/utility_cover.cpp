#include <string>

#include "mapselect/error.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect {

CoverUtility::CoverUtility(const SelectionProblem& problem, std::size_t b_cover)
    : Utility(problem.num_points()), map_(problem.map), b_cover_(b_cover) {
  if (b_cover == 0) throw Error(Errc::config, "b_cover must be positive");
  loop_slot_.assign(map_->num_frames(), -1);
  for (std::size_t j : map_->loop_frames()) loop_slot_[j] = static_cast<int>(loop_frames_++);
  if (loop_frames_ == 0) {
    throw Error(Errc::config, "coverage utility requires at least one loop-closure frame");
  }
  counts_.assign(loop_frames_, 0);
}

std::unique_ptr<Utility> CoverUtility::clone() const {
  return std::make_unique<CoverUtility>(*this);
}

std::size_t CoverUtility::uncovered_hits(std::size_t point) const {
  std::size_t hits = 0;
  for (const auto& ref : map_->point_observations(point)) {
    const int slot = loop_slot_[ref.frame];
    if (slot >= 0 && counts_[static_cast<std::size_t>(slot)] < b_cover_) ++hits;
  }
  return hits;
}

double CoverUtility::compute_gain(std::size_t point) const {
  return static_cast<double>(uncovered_hits(point)) / static_cast<double>(loop_frames_);
}

double CoverUtility::apply_commit(std::size_t point) {
  const double gain = compute_gain(point);
  for (const auto& ref : map_->point_observations(point)) {
    const int slot = loop_slot_[ref.frame];
    if (slot >= 0 && counts_[static_cast<std::size_t>(slot)]++ < b_cover_) ++covered_;
  }
  return gain;
}

CombinedUtility::CombinedUtility(const SelectionProblem& problem, const UtilityOptions& options)
    : Utility(problem.num_points()),
      odom_(make_odom_state(problem, options)),
      cover_(make_cover_state(problem, options.b_cover)) {
  // Normalizers: value of each child with every point selected.
  auto full_odom = odom_->clone();
  auto full_cover = cover_->clone();
  for (std::size_t i = 0; i < problem.num_points(); ++i) {
    full_odom->commit(i);
    full_cover->commit(i);
  }
  odom_norm_ = full_odom->value();
  cover_norm_ = full_cover->value();
  if (!(odom_norm_ > 0.0) || !(cover_norm_ > 0.0)) {
    throw Error(Errc::config, "combined utility is degenerate: f_odom(V) = " +
                                  std::to_string(odom_norm_) +
                                  ", f_cover(V) = " + std::to_string(cover_norm_));
  }
}

CombinedUtility::CombinedUtility(const CombinedUtility& other)
    : Utility(other),
      odom_(other.odom_->clone()),
      cover_(other.cover_->clone()),
      odom_norm_(other.odom_norm_),
      cover_norm_(other.cover_norm_) {}

std::unique_ptr<Utility> CombinedUtility::clone() const {
  return std::make_unique<CombinedUtility>(*this);
}

double CombinedUtility::compute_gain(std::size_t point) const {
  return odom_->gain(point) / odom_norm_ + cover_->gain(point) / cover_norm_;
}

double CombinedUtility::apply_commit(std::size_t point) {
  const double gain = compute_gain(point);
  odom_->commit(point);
  cover_->commit(point);
  return gain;
}

}  // namespace mapselect
