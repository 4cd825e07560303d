#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "mapselect/coverage_ip.hpp"
#include "mapselect/error.hpp"

using namespace mapselect;
using namespace mapselect::testing;

namespace {

IpModel random_model(std::mt19937_64& rng, std::size_t frames, std::size_t points, std::size_t budget) {
  IpModel m;
  m.frame_points.resize(frames);
  m.point_frames.resize(points);
  std::bernoulli_distribution seen(0.45);
  std::uniform_real_distribution<double> cost(0.0, 4.0);
  for (std::size_t i = 0; i < points; ++i) {
    m.q.push_back(std::floor(cost(rng)));
    for (std::size_t j = 0; j < frames; ++j) {
      if (seen(rng)) {
        m.frame_points[j].push_back(i);
        m.point_frames[i].push_back(j);
      }
    }
  }
  m.b = 1 + rng() % 3;
  m.lambda = 1.0 + static_cast<double>(rng() % 5);
  m.budget = budget;
  return m;
}

// Minimizes over integer slack explicitly instead of the closed form.
double objective_by_slack_search(const IpModel& m, const std::vector<std::size_t>& x) {
  std::vector<char> in(m.num_points(), 0);
  for (auto i : x) in[i] = 1;
  double total = 0.0;
  for (auto i : x) total += m.q[i];
  for (const auto& row : m.frame_points) {
    std::size_t covered = 0;
    for (auto i : row) covered += in[i];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t zeta = 0; zeta <= m.b; ++zeta) {
      if (covered + zeta >= m.b) best = std::min(best, m.lambda * static_cast<double>(zeta));
    }
    total += best;
  }
  return total;
}

double enumerate_best(const IpModel& m) {
  const std::size_t n = m.num_points();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != m.budget) continue;
    std::vector<std::size_t> x;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) x.push_back(i);
    if (!std::includes(x.begin(), x.end(), m.forced.begin(), m.forced.end())) continue;
    best = std::min(best, objective_by_slack_search(m, x));
  }
  return best;
}

}  // namespace

TEST_CASE("closed-form slack matches explicit slack minimization") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 8;
    const std::size_t k = 1 + rng() % n;
    const IpModel m = random_model(rng, 2 + rng() % 5, n, k);
    const auto x = random_subset(rng, n, k);
    CHECK(ip_objective(m, x) == objective_by_slack_search(m, x));
  }
}

TEST_CASE("exact solver is optimal and dominates greedy") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 3 + rng() % 9;
    IpModel m = random_model(rng, 2 + rng() % 5, n, 1 + rng() % n);
    if (trial % 3 == 0) m.forced = {rng() % n};
    const auto exact = solve_ip_exact(m);
    const auto greedy = solve_ip_greedy(m);
    CHECK(exact.size() == m.budget);
    CHECK(greedy.size() == m.budget);
    CHECK(std::is_sorted(exact.begin(), exact.end()));
    CHECK(std::includes(exact.begin(), exact.end(), m.forced.begin(), m.forced.end()));
    CHECK(ip_objective(m, exact) == doctest::Approx(enumerate_best(m)).epsilon(1e-12));
    CHECK(ip_objective(m, exact) <= ip_objective(m, greedy) + 1e-12);
  }
}

TEST_CASE("budget violations are rejected") {
  std::mt19937_64 rng(5);
  IpModel m = random_model(rng, 3, 6, 2);
  CHECK_THROWS_AS(ip_objective(m, {0}), Error);
  m.forced = {4};
  CHECK_THROWS_AS(ip_objective(m, {0, 1}), Error);
  CHECK_NOTHROW(ip_objective(m, {0, 4}));
}

TEST_CASE("exact solver refuses oversized enumerations") {
  IpModel m;
  m.q.assign(60, 1.0);
  m.point_frames.assign(60, {});
  m.frame_points.assign(1, {});
  m.budget = 30;
  try {
    solve_ip_exact(m);
    FAIL("expected blowup");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::blowup);
  }
}

TEST_CASE("build_ip derives costs from observation counts") {
  std::mt19937_64 rng(6);
  RandomMapOptions o;
  o.frames = 5;
  o.points = 12;
  const auto map = random_map(rng, o);
  const auto problem = SelectionProblem::with_last_frame_forced(map, map->num_points());
  const IpModel m = build_ip(problem, 3, 2.0);
  REQUIRE(m.num_points() == map->num_points());
  REQUIRE(m.num_frames() == map->num_frames());
  std::size_t most = 0;
  for (std::size_t i = 0; i < map->num_points(); ++i) most = std::max(most, map->point_observations(i).size());
  for (std::size_t i = 0; i < map->num_points(); ++i) {
    CHECK(m.q[i] == static_cast<double>(most - map->point_observations(i).size()));
    CHECK(m.point_frames[i].size() == map->point_observations(i).size());
  }
  CHECK(m.forced == problem.forced);
  CHECK(m.budget == problem.budget);
  CHECK(m.b == 3);
  CHECK(m.lambda == 2.0);
  // Full selection covers every frame up to its own point count.
  std::vector<std::size_t> all(m.num_points());
  std::iota(all.begin(), all.end(), 0);
  CHECK(ip_objective(m, all) == objective_by_slack_search(m, all));
}
