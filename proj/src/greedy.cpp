#include "mapselect/greedy.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "mapselect/error.hpp"

namespace mapselect {

std::vector<PointId> Selection::sorted_ids() const {
  std::vector<PointId> out = ids;
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::size_t>::max()) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(acc);
}

namespace {

using Clock = std::chrono::steady_clock;

/// Candidate ordering shared by every greedy variant: larger gain first, then
/// observed before orphan, then smaller index.
struct Ranking {
  const SlamMap* map;

  bool before(double ga, std::size_t a, double gb, std::size_t b) const {
    if (ga != gb) return ga > gb;
    const bool oa = map->is_orphan(a);
    const bool ob = map->is_orphan(b);
    if (oa != ob) return !oa;
    return a < b;
  }
};

struct Best {
  std::size_t point = std::numeric_limits<std::size_t>::max();
  double gain = -std::numeric_limits<double>::infinity();
  bool valid() const { return point != std::numeric_limits<std::size_t>::max(); }
};

Best argmax_serial(const Utility& state, const std::vector<std::size_t>& candidates,
                   const Ranking& rank) {
  Best best;
  for (std::size_t c : candidates) {
    const double g = state.gain(c);
    if (!best.valid() || rank.before(g, c, best.gain, best.point)) best = {c, g};
  }
  return best;
}

Best argmax_parallel(const Utility& state, const std::vector<std::size_t>& candidates,
                     const Ranking& rank) {
  const auto count = static_cast<std::ptrdiff_t>(candidates.size());
  const int workers = worker_count();
  if (workers <= 1 || count < 64) return argmax_serial(state, candidates, rank);

  std::vector<Best> partial(static_cast<std::size_t>(workers));
  std::exception_ptr failure;
#pragma omp parallel num_threads(workers)
  {
    Best local;
#pragma omp for schedule(dynamic, 32) nowait
    for (std::ptrdiff_t k = 0; k < count; ++k) {
      const std::size_t c = candidates[static_cast<std::size_t>(k)];
      try {
        const double g = state.gain(c);
        if (!local.valid() || rank.before(g, c, local.gain, local.point)) local = {c, g};
      } catch (...) {
#pragma omp critical(mapselect_greedy_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    partial[static_cast<std::size_t>(omp_get_thread_num())] = local;
  }
  if (failure) std::rethrow_exception(failure);
  Best best;
  for (const Best& b : partial) {
    if (b.valid() && (!best.valid() || rank.before(b.gain, b.point, best.gain, best.point))) best = b;
  }
  return best;
}

Best argmax(const Utility& state, const std::vector<std::size_t>& candidates, const Ranking& rank,
            Exec exec) {
  return exec == Exec::parallel ? argmax_parallel(state, candidates, rank)
                                : argmax_serial(state, candidates, rank);
}

/// Gains of every candidate, in candidate order.
std::vector<double> gains_of(const Utility& state, const std::vector<std::size_t>& candidates,
                             Exec exec) {
  std::vector<double> out(candidates.size());
  const auto count = static_cast<std::ptrdiff_t>(candidates.size());
  if (exec == Exec::serial || worker_count() <= 1) {
    for (std::ptrdiff_t k = 0; k < count; ++k) {
      out[static_cast<std::size_t>(k)] = state.gain(candidates[static_cast<std::size_t>(k)]);
    }
    return out;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64) num_threads(worker_count())
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    try {
      out[static_cast<std::size_t>(k)] = state.gain(candidates[static_cast<std::size_t>(k)]);
    } catch (...) {
#pragma omp critical(mapselect_greedy_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

class Run {
 public:
  Run(const SelectionProblem& problem, Utility& state, std::size_t k)
      : problem_(problem), state_(state), k_(k), start_(Clock::now()) {
    if (state.num_points() != problem.num_points()) {
      throw Error(Errc::config, "utility state does not match the problem size");
    }
    if (k > problem.num_points()) {
      throw Error(Errc::budget, "budget " + std::to_string(k) + " exceeds map size " +
                                    std::to_string(problem.num_points()));
    }
    if (k < problem.forced.size()) {
      throw Error(Errc::budget, "budget " + std::to_string(k) +
                                    " is smaller than the forced set (" +
                                    std::to_string(problem.forced.size()) + ")");
    }
    for (std::size_t f : problem.forced) {
      if (!state.is_selected(f)) add(f);
    }
    out_.forced_count = out_.points.size();
  }

  void add(std::size_t point) {
    const double before = state_.value();
    const double after = state_.commit(point);
    out_.points.push_back(point);
    out_.ids.push_back(problem_.slam_map().points()[point].id);
    out_.gains.push_back(after - before);
  }

  bool full() const { return state_.selected().size() >= k_; }

  std::vector<std::size_t> remaining() const {
    std::vector<std::size_t> out;
    out.reserve(state_.num_points() - state_.selected().size());
    for (std::size_t i = 0; i < state_.num_points(); ++i) {
      if (!state_.is_selected(i)) out.push_back(i);
    }
    return out;
  }

  void count(std::size_t probes) { out_.evaluations += probes; }

  Selection finish() {
    out_.value = state_.value();
    out_.seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    return std::move(out_);
  }

 private:
  const SelectionProblem& problem_;
  Utility& state_;
  std::size_t k_;
  Clock::time_point start_;
  Selection out_;
};

}  // namespace

Selection classic_greedy(const SelectionProblem& problem, Utility& state, std::size_t k,
                         Exec exec) {
  Run run(problem, state, k);
  const Ranking rank{problem.map.get()};
  std::vector<std::size_t> pool = run.remaining();
  while (!run.full() && !pool.empty()) {
    const Best best = argmax(state, pool, rank, exec);
    run.count(pool.size());
    run.add(best.point);
    pool.erase(std::lower_bound(pool.begin(), pool.end(), best.point));
  }
  return run.finish();
}

Selection lazy_greedy(const SelectionProblem& problem, Utility& state, std::size_t k, Exec exec) {
  Run run(problem, state, k);
  const Ranking rank{problem.map.get()};

  struct Entry {
    double bound;
    std::size_t point;
    std::size_t stamp;  // commit count at which bound was computed
  };
  auto lower_priority = [&rank](const Entry& a, const Entry& b) {
    return rank.before(b.bound, b.point, a.bound, a.point);
  };

  if (run.full()) return run.finish();
  const std::vector<std::size_t> pool = run.remaining();
  const std::vector<double> initial = gains_of(state, pool, exec);
  run.count(pool.size());
  std::vector<Entry> entries;
  entries.reserve(pool.size());
  for (std::size_t k2 = 0; k2 < pool.size(); ++k2) entries.push_back({initial[k2], pool[k2], 0});
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> heap(lower_priority,
                                                                               std::move(entries));

  std::size_t step = 0;
  while (!run.full() && !heap.empty()) {
    Entry top = heap.top();
    heap.pop();
    if (top.stamp == step) {
      run.add(top.point);
      ++step;
      continue;
    }
    top.bound = state.gain(top.point);
    top.stamp = step;
    run.count(1);
    heap.push(top);
  }
  return run.finish();
}

std::size_t stochastic_sample_size(std::size_t n, std::size_t k, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(Errc::config, "stochastic greedy epsilon must lie in (0, 1)");
  }
  if (k == 0) return 0;
  const double r = static_cast<double>(n) / static_cast<double>(k) * std::log(1.0 / epsilon);
  return static_cast<std::size_t>(std::ceil(r));
}

Selection stochastic_greedy(const SelectionProblem& problem, Utility& state, std::size_t k,
                            double epsilon, std::uint64_t seed, Exec exec) {
  const std::size_t r = stochastic_sample_size(problem.num_points(), k, epsilon);
  Run run(problem, state, k);
  const Ranking rank{problem.map.get()};
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool = run.remaining();
  std::vector<std::size_t> sample;
  while (!run.full() && !pool.empty()) {
    const std::size_t draw = std::min(r, pool.size());
    for (std::size_t a = 0; a < draw; ++a) {
      std::uniform_int_distribution<std::size_t> pick(a, pool.size() - 1);
      std::swap(pool[a], pool[pick(rng)]);
    }
    sample.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(draw));
    const Best best = argmax(state, sample, rank, exec);
    run.count(draw);
    run.add(best.point);
    const auto pos = std::find(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(draw),
                               best.point);
    std::swap(*pos, pool.back());
    pool.pop_back();
  }
  return run.finish();
}

Selection random_select(const SelectionProblem& problem, std::size_t k, std::uint64_t seed,
                        Utility* state) {
  std::unique_ptr<Utility> scratch;
  if (!state) {
    // A cheap stand-in so the same bookkeeping applies; values stay 0.
    class Null final : public Utility {
     public:
      using Utility::Utility;
      UtilityKind kind() const override { return UtilityKind::cover; }
      std::unique_ptr<Utility> clone() const override { return std::make_unique<Null>(*this); }

     protected:
      double compute_gain(std::size_t) const override { return 0.0; }
      double apply_commit(std::size_t) override { return 0.0; }
    };
    scratch = std::make_unique<Null>(problem.num_points());
    state = scratch.get();
  }
  Run run(problem, *state, k);
  std::vector<std::size_t> pool = run.remaining();
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t p : pool) {
    if (run.full()) break;
    run.add(p);
  }
  return run.finish();
}

Selection brute_force_opt(const SelectionProblem& problem, const UtilityFactory& factory,
                          std::size_t k) {
  const auto start = Clock::now();
  auto root = factory();
  if (k < problem.forced.size() || k > problem.num_points()) {
    throw Error(Errc::budget, "brute force budget out of range");
  }
  for (std::size_t f : problem.forced) root->commit(f);

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < problem.num_points(); ++i) {
    if (!root->is_selected(i)) free.push_back(i);
  }
  const std::size_t pick = k - problem.forced.size();
  const std::size_t combos = binomial(free.size(), pick);
  if (combos > kEnumerationCap) {
    throw Error(Errc::blowup, "C(" + std::to_string(free.size()) + ", " + std::to_string(pick) +
                                  ") subsets exceed the enumeration cap");
  }

  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_subset;
  std::vector<std::size_t> current;
  std::size_t leaves = 0;

  // Depth-first in lexicographic order; each level owns a clone of its parent.
  auto recurse = [&](auto&& self, const Utility& parent, std::size_t from) -> void {
    if (current.size() == pick) {
      ++leaves;
      if (parent.value() > best_value) {
        best_value = parent.value();
        best_subset = current;
      }
      return;
    }
    const std::size_t need = pick - current.size();
    for (std::size_t a = from; a + need <= free.size(); ++a) {
      auto child = parent.clone();
      child->commit(free[a]);
      current.push_back(free[a]);
      self(self, *child, a + 1);
      current.pop_back();
    }
  };
  recurse(recurse, *root, 0);

  auto replay = factory();
  Run run(problem, *replay, k);
  for (std::size_t p : best_subset) run.add(p);
  run.count(leaves);
  Selection out = run.finish();
  out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

}  // namespace mapselect
