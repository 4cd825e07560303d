#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mapselect/map_model.hpp"
#include "mapselect/parallel.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect {

struct Selection {
  std::vector<std::size_t> points;  // dense indices in commit order, forced set first
  std::vector<PointId> ids;         // ids in the same order
  std::vector<double> gains;        // gain applied at each commit
  std::size_t forced_count = 0;     // leading entries that came from the forced set
  double value = 0.0;               // utility value after the last commit
  std::size_t evaluations = 0;      // number of marginal-gain probes
  double seconds = 0.0;

  std::vector<PointId> sorted_ids() const;
};

/// Classic greedy with the forced set committed first; ties go to observed
/// points, then to the smallest id. Always fills to exactly k points.
Selection classic_greedy(const SelectionProblem& problem, Utility& state, std::size_t k,
                         Exec exec = Exec::parallel);

/// Lazy evaluation over a heap of stale upper bounds; same output as
/// classic_greedy with at most as many probes.
Selection lazy_greedy(const SelectionProblem& problem, Utility& state, std::size_t k,
                      Exec exec = Exec::parallel);

/// ceil((n / k) * ln(1 / epsilon)); 0 when k == 0.
std::size_t stochastic_sample_size(std::size_t n, std::size_t k, double epsilon);

/// Each step probes a seeded uniform sample (without replacement) of
/// stochastic_sample_size(n, k, epsilon) unselected points, capped at the pool.
/// Results depend only on the seed, never on worker scheduling.
Selection stochastic_greedy(const SelectionProblem& problem, Utility& state, std::size_t k,
                            double epsilon, std::uint64_t seed, Exec exec = Exec::parallel);

/// Forced set plus uniformly random points up to k. When `state` is given the
/// chosen points are committed to it and value/gains are reported.
Selection random_select(const SelectionProblem& problem, std::size_t k, std::uint64_t seed,
                        Utility* state = nullptr);

using UtilityFactory = std::function<std::unique_ptr<Utility>()>;

/// Largest number of k-subsets brute_force_opt will enumerate.
inline constexpr std::size_t kEnumerationCap = 1'000'000;

/// Exact maximizer over all k-subsets containing the forced set; the first
/// optimum in lexicographic order wins. Throws Errc::blowup above the cap.
Selection brute_force_opt(const SelectionProblem& problem, const UtilityFactory& factory,
                          std::size_t k);

/// Binomial coefficient saturating at SIZE_MAX.
std::size_t binomial(std::size_t n, std::size_t k);

}  // namespace mapselect
