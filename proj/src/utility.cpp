#include <string>

#include "mapselect/error.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect {

const char* to_string(UtilityKind kind) noexcept {
  switch (kind) {
    case UtilityKind::slam: return "slam";
    case UtilityKind::local: return "local";
    case UtilityKind::odom: return "odom";
    case UtilityKind::cover: return "cover";
    case UtilityKind::combined: return "combined";
  }
  return "unknown";
}

std::optional<UtilityKind> parse_utility_kind(std::string_view name) {
  if (name == "slam") return UtilityKind::slam;
  if (name == "local" || name == "localisation") return UtilityKind::local;
  if (name == "odom" || name == "odometry") return UtilityKind::odom;
  if (name == "cover") return UtilityKind::cover;
  if (name == "combined" || name == "odom+cover") return UtilityKind::combined;
  return std::nullopt;
}

Utility::Utility(std::size_t num_points) : in_set_(num_points, 0) {}

Utility::Utility(const Utility& other)
    : in_set_(other.in_set_), order_(other.order_), value_(other.value_) {}

void Utility::check_point(std::size_t point) const {
  if (point >= in_set_.size()) {
    throw Error(Errc::lookup, "point index " + std::to_string(point) + " out of range");
  }
  if (in_set_[point]) {
    throw Error(Errc::duplicate, "point index " + std::to_string(point) + " already selected");
  }
}

double Utility::gain(std::size_t point) const {
  check_point(point);
  struct Guard {
    std::atomic<int>& n;
    explicit Guard(std::atomic<int>& c) : n(c) { n.fetch_add(1, std::memory_order_acq_rel); }
    ~Guard() { n.fetch_sub(1, std::memory_order_acq_rel); }
  } guard(probes_in_flight_);
  return compute_gain(point);
}

double Utility::commit(std::size_t point) {
  check_point(point);
  if (probes_in_flight_.load(std::memory_order_acquire) != 0) {
    throw Error(Errc::concurrency, "commit while gain probes are in flight");
  }
  value_ += apply_commit(point);
  in_set_[point] = 1;
  order_.push_back(point);
  return value_;
}

std::unique_ptr<Utility> make_slam_state(const SelectionProblem& problem,
                                         const UtilityOptions& options) {
  return std::make_unique<SlamUtility>(problem, options);
}

std::unique_ptr<Utility> make_local_state(const SelectionProblem& problem,
                                          const UtilityOptions& options) {
  return std::make_unique<LocalUtility>(problem, options);
}

std::unique_ptr<Utility> make_odom_state(const SelectionProblem& problem,
                                         const UtilityOptions& options) {
  return std::make_unique<OdomUtility>(problem, options);
}

std::unique_ptr<Utility> make_cover_state(const SelectionProblem& problem, std::size_t b_cover) {
  return std::make_unique<CoverUtility>(problem, b_cover);
}

std::unique_ptr<Utility> make_combined_state(const SelectionProblem& problem,
                                             const UtilityOptions& options) {
  return std::make_unique<CombinedUtility>(problem, options);
}

std::unique_ptr<Utility> make_utility(UtilityKind kind, const SelectionProblem& problem,
                                      const UtilityOptions& options) {
  switch (kind) {
    case UtilityKind::slam: return make_slam_state(problem, options);
    case UtilityKind::local: return make_local_state(problem, options);
    case UtilityKind::odom: return make_odom_state(problem, options);
    case UtilityKind::cover: return make_cover_state(problem, options.b_cover);
    case UtilityKind::combined: return make_combined_state(problem, options);
  }
  throw Error(Errc::usage, "unknown utility kind");
}

}  // namespace mapselect
