#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include "mapselect/coverage_ip.hpp"
#include "mapselect/error.hpp"
#include "mapselect/simeval.hpp"

namespace mapselect {

std::string Method::name() const {
  switch (algo) {
    case Algo::lazy: return to_string(utility);
    case Algo::stochastic: return std::string(to_string(utility)) + "-stoch";
    case Algo::random: return "random";
    case Algo::ip: return "ip100";
    case Algo::full: return "full";
    case Algo::empty: return "empty";
  }
  return "unknown";
}

std::optional<Method> Method::parse(std::string_view name) {
  using A = Algo;
  if (name == "random") return Method{A::random};
  if (name == "ip100" || name == "ip") return Method{A::ip};
  if (name == "full") return Method{A::full};
  if (name == "empty") return Method{A::empty};
  constexpr std::string_view suffix = "-stoch";
  A algo = A::lazy;
  if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix) {
    algo = A::stochastic;
    name.remove_suffix(suffix.size());
  }
  const auto kind = parse_utility_kind(name);
  if (!kind) return std::nullopt;
  return Method{algo, *kind};
}

std::size_t Budget::resolve(std::size_t n) const {
  if (!percent) return static_cast<std::size_t>(amount);
  const double x = amount * static_cast<double>(n) / 100.0;
  // Guard against 450.00000000000006-style round-off before the ceiling.
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

std::string Budget::str() const {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, amount);
  std::string out(buf, res.ptr);
  if (percent) out += '%';
  return out;
}

Budget Budget::parse(std::string_view text) {
  Budget b;
  if (!text.empty() && text.back() == '%') {
    b.percent = true;
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw Error(Errc::usage, "budget must be a count or a percentage like 15%");
  }
  if (b.percent) {
    if (!(value > 0.0 && value <= 100.0)) throw Error(Errc::usage, "budget percentage must be in (0, 100]");
  } else if (value < 0.0 || value != std::floor(value)) {
    throw Error(Errc::usage, "absolute budget must be a non-negative integer");
  }
  b.amount = value;
  return b;
}

namespace {

using Clock = std::chrono::steady_clock;

// A Selection for a fixed point set: forced points first, then the rest ascending.
Selection fixed_selection(const SelectionProblem& problem, const std::vector<std::size_t>& chosen,
                          Clock::time_point start) {
  Selection sel;
  std::vector<char> in(problem.num_points(), 0);
  for (const std::size_t f : problem.forced) {
    sel.points.push_back(f);
    in[f] = 1;
  }
  sel.forced_count = sel.points.size();
  for (const std::size_t i : chosen) {
    if (!in[i]) {
      sel.points.push_back(i);
      in[i] = 1;
    }
  }
  for (const std::size_t i : sel.points) sel.ids.push_back(problem.slam_map().points()[i].id);
  sel.gains.assign(sel.points.size(), 0.0);
  sel.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return sel;
}

std::shared_ptr<const SlamMap> borrow(const SlamMap& map) {
  return std::shared_ptr<const SlamMap>(std::shared_ptr<const SlamMap>{}, &map);
}

double value_of(UtilityKind kind, const SelectionProblem& problem,
                std::span<const std::size_t> points, const RunConfig& config) {
  auto state = make_utility(kind, problem, config.utility_options());
  for (const std::size_t i : points) state->commit(i);
  return state->value();
}

}  // namespace

Selection run_method(const SelectionProblem& problem, const Method& method,
                     const RunConfig& config) {
  const auto start = Clock::now();
  switch (method.algo) {
    case Method::Algo::lazy: {
      auto state = make_utility(method.utility, problem, config.utility_options());
      return lazy_greedy(problem, *state, problem.budget, config.exec);
    }
    case Method::Algo::stochastic: {
      auto state = make_utility(method.utility, problem, config.utility_options());
      return stochastic_greedy(problem, *state, problem.budget, config.stochastic_epsilon,
                               config.seed, config.exec);
    }
    case Method::Algo::random:
      return random_select(problem, problem.budget, config.seed);
    case Method::Algo::ip: {
      const IpModel model = build_ip(problem, config.ip_b, config.ip_lambda);
      return fixed_selection(problem, solve_ip_greedy(model), start);
    }
    case Method::Algo::full: {
      std::vector<std::size_t> all(problem.num_points());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      return fixed_selection(problem, all, start);
    }
    case Method::Algo::empty:
      return fixed_selection(problem, {}, start);
  }
  throw Error(Errc::config, "unknown selection method");
}

EvalReport evaluate_selection(const SlamMap& map, const GroundTruth& truth,
                              std::span<const std::size_t> selected, const RunConfig& config) {
  if (truth.poses.size() != map.num_frames()) {
    throw Error(Errc::data, "ground truth does not match the map's keyframes");
  }
  EvalReport report;
  const BaResult ba = gauss_newton_ba(map, selected, config.ba);
  report.ba_final_cost = ba.final_cost();
  report.ape_rmse = ape(ba.poses, truth.poses);
  for (const std::size_t d : config.rpe_deltas) report.rpe_per_delta[d] = rpe(ba.poses, truth.poses, d);

  const bool has_loops = !map.loop_frames().empty();
  report.recall_proxy = has_loops ? recall_proxy(map, selected, config.recall_threshold)
                                  : std::numeric_limits<double>::quiet_NaN();

  const SelectionProblem all =
      SelectionProblem::make(borrow(map), map.num_points(), {}, config.prior_epsilon, config.noise_scale);
  report.utility_values["local"] = value_of(UtilityKind::local, all, selected, config);
  report.utility_values["odom"] = value_of(UtilityKind::odom, all, selected, config);
  if (has_loops) report.utility_values["cover"] = value_of(UtilityKind::cover, all, selected, config);
  return report;
}

std::vector<SweepRow> budget_sweep(const WorldSpec& spec, const std::vector<Method>& kinds,
                                   const std::vector<Budget>& budgets,
                                   const std::vector<std::uint64_t>& seeds,
                                   const RunConfig& config) {
  struct Instance {
    std::shared_ptr<const SlamMap> map;
    GroundTruth truth;
  };
  std::vector<Instance> worlds(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    WorldSpec ws = spec;
    ws.seed = seeds[s];
    World w = generate_world(ws);
    worlds[s].map = std::make_shared<const SlamMap>(SlamMap::build(std::move(w.data)));
    worlds[s].truth = std::move(w.truth);
  }

  const std::size_t per_seed = kinds.size() * budgets.size();
  const std::size_t total = seeds.size() * per_seed;
  std::vector<SweepRow> rows(total);
  std::exception_ptr failure;

  auto run_one = [&](std::size_t task) {
    const std::size_t s = task / per_seed;
    const Method& method = kinds[(task % per_seed) / budgets.size()];
    const Budget& budget = budgets[task % budgets.size()];
    const Instance& inst = worlds[s];

    RunConfig rc = config;
    rc.seed = seeds[s];
    const std::size_t n = inst.map->num_points();
    const std::size_t k = method.algo == Method::Algo::full ? n : budget.resolve(n);
    const SelectionProblem problem = SelectionProblem::with_last_frame_forced(
        inst.map, method.algo == Method::Algo::empty ? forced_set(*inst.map).size() : k,
        rc.prior_epsilon, rc.noise_scale);
    const Selection sel = run_method(problem, method, rc);
    const EvalReport report = evaluate_selection(*inst.map, inst.truth, sel.points, rc);

    SweepRow& row = rows[task];
    row.kind = method.name();
    row.budget = sel.points.size();
    row.seed = seeds[s];
    row.ape_m = report.ape_rmse;
    row.rpe_rmse = report.rpe_per_delta.empty() ? 0.0 : report.rpe_per_delta.begin()->second;
    row.recall_proxy = report.recall_proxy;
    const bool has_value = method.algo == Method::Algo::lazy || method.algo == Method::Algo::stochastic;
    row.utility = has_value ? sel.value : report.utility_values.at("odom");
    row.select_seconds = sel.seconds;
    row.gain_evals = sel.evaluations;
  };

  const bool parallel = config.exec == Exec::parallel && worker_count() > 1;
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count()) if (parallel)
  for (std::size_t task = 0; task < total; ++task) {
    try {
      run_one(task);
    } catch (...) {
#pragma omp critical(mapselect_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

namespace {

void append(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void append(std::string& out, std::uint64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string to_csv(const SweepRow& row) {
  std::string out = row.kind;
  out += ',';
  append(out, static_cast<std::uint64_t>(row.budget));
  out += ',';
  append(out, row.seed);
  for (const double v : {row.ape_m, row.rpe_rmse, row.recall_proxy, row.utility, row.select_seconds}) {
    out += ',';
    append(out, v);
  }
  out += ',';
  append(out, static_cast<std::uint64_t>(row.gain_evals));
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& row : rows) {
    out += to_csv(row);
    out += '\n';
  }
  return out;
}

}  // namespace mapselect
