#pragma once

#include <cstddef>
#include <vector>

#include "mapselect/map_model.hpp"

namespace mapselect {

/// Coverage integer program:
///   min q^T x + lambda 1^T zeta   s.t.  A x + zeta >= b 1,  sum x = budget,
/// with forced points fixed to x_i = 1. The optimal slack for a given x is
/// zeta_j = max(0, b - coverage_j(x)), so the model is evaluated in closed form.
struct IpModel {
  std::vector<double> q;                               // per-point cost, >= 0
  std::vector<std::vector<std::size_t>> frame_points;  // rows of A: points seen per frame
  std::vector<std::vector<std::size_t>> point_frames;  // columns of A
  std::size_t b = 100;
  double lambda = 25.0;
  std::size_t budget = 0;
  std::vector<std::size_t> forced;                     // ascending

  std::size_t num_points() const { return q.size(); }
  std::size_t num_frames() const { return frame_points.size(); }
};

/// Defaults of the "ip100" baseline.
inline constexpr std::size_t kIp100Coverage = 100;
inline constexpr double kIp100Lambda = 25.0;

/// q_i = (max observation count over points) - (observation count of i);
/// A from all observations; budget and forced set from the problem.
IpModel build_ip(const SelectionProblem& problem, std::size_t b = kIp100Coverage,
                 double lambda = kIp100Lambda);

/// q^T x + lambda sum_j max(0, b - |x n V_j|) for a selection given as point
/// indices. Throws Errc::budget when |x| != budget or a forced point is missing.
double ip_objective(const IpModel& model, const std::vector<std::size_t>& selection);

/// Exhaustive minimizer with bound pruning; lexicographically first optimum.
/// Throws Errc::blowup when C(n_free, budget_free) exceeds kEnumerationCap.
std::vector<std::size_t> solve_ip_exact(const IpModel& model);

/// Adds the point with the largest objective decrease
/// (lambda * newly-covered-frames - q_i), ties to the smallest index, until the
/// budget is reached.
std::vector<std::size_t> solve_ip_greedy(const IpModel& model);

}  // namespace mapselect
