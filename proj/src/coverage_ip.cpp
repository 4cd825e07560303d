#include "mapselect/coverage_ip.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <string>

#include "mapselect/error.hpp"
#include "mapselect/greedy.hpp"

namespace mapselect {

IpModel build_ip(const SelectionProblem& problem, std::size_t b, double lambda) {
  if (b == 0) throw Error(Errc::config, "ip coverage b must be >= 1");
  if (!(lambda > 0.0)) throw Error(Errc::config, "ip lambda must be positive");
  const SlamMap& map = problem.slam_map();
  IpModel model;
  model.b = b;
  model.lambda = lambda;
  model.budget = problem.budget;
  model.forced = problem.forced;
  model.frame_points.resize(map.num_frames());
  model.point_frames.resize(map.num_points());

  std::size_t most = 0;
  for (std::size_t i = 0; i < map.num_points(); ++i) {
    for (const auto& ref : map.point_observations(i)) model.point_frames[i].push_back(ref.frame);
    most = std::max(most, model.point_frames[i].size());
  }
  for (std::size_t j = 0; j < map.num_frames(); ++j) {
    const auto pts = map.frame_points(j);
    model.frame_points[j].assign(pts.begin(), pts.end());
  }
  model.q.resize(map.num_points());
  for (std::size_t i = 0; i < map.num_points(); ++i) {
    model.q[i] = static_cast<double>(most - model.point_frames[i].size());
  }
  return model;
}

double ip_objective(const IpModel& model, const std::vector<std::size_t>& selection) {
  if (selection.size() != model.budget) {
    throw Error(Errc::budget, "ip selection has " + std::to_string(selection.size()) +
                                  " points, budget is " + std::to_string(model.budget));
  }
  std::vector<char> chosen(model.num_points(), 0);
  double cost = 0.0;
  for (std::size_t i : selection) {
    if (i >= model.num_points() || chosen[i]) {
      throw Error(Errc::budget, "ip selection contains an invalid or repeated point");
    }
    chosen[i] = 1;
    cost += model.q[i];
  }
  for (std::size_t f : model.forced) {
    if (!chosen[f]) throw Error(Errc::budget, "ip selection is missing a forced point");
  }
  std::vector<std::size_t> coverage(model.num_frames(), 0);
  for (std::size_t i : selection) {
    for (std::size_t j : model.point_frames[i]) ++coverage[j];
  }
  double slack = 0.0;
  for (std::size_t c : coverage) {
    if (c < model.b) slack += static_cast<double>(model.b - c);
  }
  return cost + model.lambda * slack;
}

std::vector<std::size_t> solve_ip_exact(const IpModel& model) {
  const std::size_t n = model.num_points();
  if (model.budget < model.forced.size() || model.budget > n) {
    throw Error(Errc::budget, "ip budget out of range");
  }
  std::vector<char> is_forced(n, 0);
  for (std::size_t f : model.forced) is_forced[f] = 1;
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_forced[i]) free.push_back(i);
  }
  const std::size_t pick = model.budget - model.forced.size();
  if (binomial(free.size(), pick) > kEnumerationCap) {
    throw Error(Errc::blowup, "ip enumeration exceeds the cap");
  }

  std::size_t widest = 0;
  for (std::size_t i : free) widest = std::max(widest, model.point_frames[i].size());

  std::vector<std::size_t> coverage(model.num_frames(), 0);
  double cost = 0.0;
  std::size_t slack = model.num_frames() * model.b;
  auto add = [&](std::size_t i, int sign) {
    cost += sign * model.q[i];
    for (std::size_t j : model.point_frames[i]) {
      if (sign > 0) {
        if (coverage[j]++ < model.b) --slack;
      } else {
        if (--coverage[j] < model.b) ++slack;
      }
    }
  };
  for (std::size_t f : model.forced) add(f, +1);

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_pick;
  std::vector<std::size_t> current;

  auto recurse = [&](auto&& self, std::size_t from) -> void {
    const std::size_t need = pick - current.size();
    // Each further point costs >= 0 and removes at most `widest` units of slack.
    const double reachable = static_cast<double>(slack > need * widest ? slack - need * widest : 0);
    if (cost + model.lambda * reachable >= best) return;
    if (need == 0) {
      best = cost + model.lambda * static_cast<double>(slack);
      best_pick = current;
      return;
    }
    for (std::size_t a = from; a + need <= free.size(); ++a) {
      add(free[a], +1);
      current.push_back(free[a]);
      self(self, a + 1);
      current.pop_back();
      add(free[a], -1);
    }
  };
  recurse(recurse, 0);

  std::vector<std::size_t> out = model.forced;
  out.insert(out.end(), best_pick.begin(), best_pick.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> solve_ip_greedy(const IpModel& model) {
  const std::size_t n = model.num_points();
  if (model.budget < model.forced.size() || model.budget > n) {
    throw Error(Errc::budget, "ip budget out of range");
  }
  std::vector<std::size_t> coverage(model.num_frames(), 0);
  std::vector<char> chosen(n, 0);
  std::vector<std::size_t> out;
  auto take = [&](std::size_t i) {
    chosen[i] = 1;
    out.push_back(i);
    for (std::size_t j : model.point_frames[i]) ++coverage[j];
  };
  for (std::size_t f : model.forced) take(f);

  auto decrease = [&](std::size_t i) {
    std::size_t newly = 0;
    for (std::size_t j : model.point_frames[i]) {
      if (coverage[j] < model.b) ++newly;
    }
    return model.lambda * static_cast<double>(newly) - model.q[i];
  };

  // Lazy evaluation: the coverage part only shrinks as points are added.
  struct Entry {
    double bound;
    std::size_t point;
    std::size_t stamp;
  };
  auto lower = [](const Entry& a, const Entry& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.point > b.point;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> heap(lower);
  for (std::size_t i = 0; i < n; ++i) {
    if (!chosen[i]) heap.push({decrease(i), i, 0});
  }
  std::size_t step = 0;
  while (out.size() < model.budget && !heap.empty()) {
    Entry top = heap.top();
    heap.pop();
    if (top.stamp == step) {
      take(top.point);
      ++step;
      continue;
    }
    top.bound = decrease(top.point);
    top.stamp = step;
    heap.push(top);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mapselect
