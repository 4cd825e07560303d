#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mapselect/error.hpp"
#include "mapselect/map_io.hpp"
#include "mapselect/simeval.hpp"

namespace mapselect::cli {

namespace {

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  return {buf, std::to_chars(buf, buf + sizeof buf, v).ptr};
}

Method parse_method(const std::string& name) {
  const auto m = Method::parse(name);
  if (!m) throw Error(Errc::usage, "unknown utility or baseline '" + name + "'");
  return *m;
}

struct WorldArgs {
  WorldSpec spec;
  std::string shape = "loop";

  void add(CLI::App& app) {
    app.add_option("--shape", shape, "loop | figure8 | corridor")->capture_default_str();
    app.add_option("--frames", spec.frames, "number of keyframes t")->capture_default_str();
    app.add_option("--points-per-frame", spec.points_per_frame, "points scattered per keyframe")
        ->capture_default_str();
    app.add_option("--spacing", spec.frame_spacing, "metres between keyframes")->capture_default_str();
    app.add_option("--radius", spec.observation_radius, "observation radius in metres")->capture_default_str();
    app.add_option("--fov", spec.field_of_view_deg, "horizontal field of view in degrees")->capture_default_str();
    app.add_option("--loop-fraction", spec.loop_fraction, "fraction of trailing loop frames")
        ->capture_default_str();
    app.add_option("--sigma", spec.sigma, "pixel noise std-dev")->capture_default_str();
    app.add_option("--mono-fraction", spec.mono_fraction, "fraction of observations made mono")
        ->capture_default_str();
    app.add_option("--pose-noise-m", spec.pose_noise_m, "stored pose perturbation, metres")
        ->capture_default_str();
    app.add_option("--pose-noise-deg", spec.pose_noise_deg, "stored pose perturbation, degrees")
        ->capture_default_str();
    app.add_option("--point-noise-m", spec.point_noise_m, "stored point perturbation, metres")
        ->capture_default_str();
  }

  WorldSpec resolve() {
    const auto s = parse_shape(shape);
    if (!s) throw Error(Errc::usage, "unknown shape '" + shape + "'");
    spec.shape = *s;
    return spec;
  }
};

struct RunArgs {
  RunConfig config;
  bool no_cache = false;
  bool serial = false;

  void add(CLI::App& app) {
    app.add_option("--epsilon", config.stochastic_epsilon, "stochastic greedy epsilon")->capture_default_str();
    app.add_option("--b-cover", config.b_cover, "coverage cap b_cover")->capture_default_str();
    app.add_option("--ip-b", config.ip_b, "ip coverage target b")->capture_default_str();
    app.add_option("--ip-lambda", config.ip_lambda, "ip slack weight lambda")->capture_default_str();
    app.add_option("--prior-epsilon", config.prior_epsilon, "prior precision epsilon")->capture_default_str();
    app.add_option("--sigma-scale", config.noise_scale, "scale applied to observation sigma")
        ->capture_default_str();
    app.add_flag("--no-cache", no_cache, "recompute per-point contributions on every probe");
    app.add_flag("--serial", serial, "disable OpenMP in selection and sweeps");
  }

  RunConfig resolve() {
    config.cache_contributions = !no_cache;
    config.exec = serial ? Exec::serial : Exec::parallel;
    return config;
  }
};

std::shared_ptr<const SlamMap> build_map(MapData data) {
  return std::make_shared<const SlamMap>(SlamMap::build(std::move(data)));
}

SelectionProblem make_problem(const std::shared_ptr<const SlamMap>& map, const Method& method,
                              const Budget& budget, const RunConfig& config) {
  const std::size_t n = map->num_points();
  std::size_t k = budget.resolve(n);
  if (method.algo == Method::Algo::full) k = n;
  if (method.algo == Method::Algo::empty) k = forced_set(*map).size();
  return SelectionProblem::with_last_frame_forced(map, k, config.prior_epsilon, config.noise_scale);
}

void print_report(std::ostream& out, const EvalReport& r, const SweepRow& row) {
  out << "ape_m " << num(r.ape_rmse) << '\n';
  for (const auto& [d, e] : r.rpe_per_delta) out << "rpe_rmse[" << d << "] " << num(e) << '\n';
  out << "recall_proxy " << num(r.recall_proxy) << '\n';
  for (const auto& [k, v] : r.utility_values) out << "utility_" << k << ' ' << num(v) << '\n';
  out << "ba_final_cost " << num(r.ba_final_cost) << '\n';
  out << kSweepCsvHeader << '\n' << to_csv(row) << '\n';
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Map point selection for sparse visual SLAM maps"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic map with ground truth");
  WorldArgs gen_world;
  gen_world.add(*gen);
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "world seed")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "output map path (.gz for gzip)")->required();

  // select
  auto* sel = app.add_subcommand("select", "choose a budgeted subset of map points");
  std::string sel_map, sel_utility = "odom", sel_budget, sel_out;
  std::uint64_t sel_seed = 1;
  RunArgs sel_run;
  sel->add_option("map", sel_map, "map file")->required();
  sel->add_option("--utility", sel_utility,
                  "slam | local | odom | cover | combined, '-stoch' suffix for stochastic greedy, or "
                  "random | ip100 | full | empty")
      ->capture_default_str();
  sel->add_option("--budget", sel_budget, "point count or percentage, e.g. 300 or 15%")->required();
  sel->add_option("--seed", sel_seed, "seed for stochastic and random methods")->capture_default_str();
  sel->add_option("-o,--out", sel_out, "selection file; stdout when omitted");
  sel_run.add(*sel);

  // eval
  auto* ev = app.add_subcommand("eval", "bundle-adjust a selection and score it against ground truth");
  std::string ev_map, ev_sel, ev_baseline, ev_budget;
  std::uint64_t ev_seed = 1;
  std::vector<std::size_t> ev_deltas{1};
  RunArgs ev_run;
  int ev_iters = 20;
  std::size_t ev_threshold = kDefaultRecallThreshold;
  ev->add_option("map", ev_map, "map file with ground truth")->required();
  ev->add_option("selection", ev_sel, "selection file");
  ev->add_option("--baseline", ev_baseline, "full | empty | random instead of a selection file");
  ev->add_option("--budget", ev_budget, "budget for --baseline random");
  ev->add_option("--seed", ev_seed, "seed for --baseline random")->capture_default_str();
  ev->add_option("--rpe-delta", ev_deltas, "frame deltas for RPE")->capture_default_str();
  ev->add_option("--recall-threshold", ev_threshold, "points a loop frame needs")->capture_default_str();
  ev->add_option("--ba-iters", ev_iters, "Gauss-Newton iterations")->capture_default_str();
  ev_run.add(*ev);

  // sweep
  auto* sw = app.add_subcommand("sweep", "generate, select and evaluate over kinds, budgets and seeds");
  WorldArgs sw_world;
  sw_world.add(*sw);
  RunArgs sw_run;
  sw_run.add(*sw);
  std::string sw_kinds = "odom,random", sw_budgets = "10%,20%,30%", sw_seeds, sw_out;
  std::size_t sw_seed_count = 3;
  sw->add_option("--kinds", sw_kinds, "comma-separated methods")->capture_default_str();
  sw->add_option("--budgets", sw_budgets, "comma-separated budgets")->capture_default_str();
  sw->add_option("--seeds", sw_seeds, "comma-separated seeds");
  sw->add_option("--seed-count", sw_seed_count, "use seeds 1..N when --seeds is absent")->capture_default_str();
  sw->add_option("-o,--out", sw_out, "CSV path; stdout when omitted");

  // validate
  auto* val = app.add_subcommand("validate", "check a map file against every invariant");
  std::string val_map;
  val->add_option("map", val_map, "map file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    WorldSpec spec = gen_world.resolve();
    spec.seed = gen_seed;
    World world = generate_world(spec);
    MapFile file{world.data, TruthRecords::from(world.data, world.truth)};
    save_map(gen_out, file);
    out << "frames " << file.data.keyframes.size() << " points " << file.data.points.size()
        << " observations " << file.data.observations.size() << '\n';
    return 0;
  }

  if (sel->parsed()) {
    const Method method = parse_method(sel_utility);
    const Budget budget = Budget::parse(sel_budget);
    RunConfig config = sel_run.resolve();
    config.seed = sel_seed;
    const auto map = build_map(load_map(sel_map).data);
    const SelectionProblem problem = make_problem(map, method, budget, config);
    const Selection s = run_method(problem, method, config);
    SelectionFile file{method.name(), s.points.size(), s.value, s.seconds, s.evaluations, s.sorted_ids()};
    if (sel_out.empty()) {
      out << format_selection(file);
    } else {
      save_selection(sel_out, file);
      out << "kind " << file.kind << " budget " << file.budget << " value " << num(file.value)
          << " seconds " << num(file.seconds) << " gain_evals " << file.gain_evals << '\n';
    }
    return 0;
  }

  if (ev->parsed()) {
    if (ev_sel.empty() == ev_baseline.empty()) {
      throw Error(Errc::usage, "eval needs exactly one of a selection file or --baseline");
    }
    RunConfig config = ev_run.resolve();
    config.seed = ev_seed;
    config.rpe_deltas = ev_deltas;
    config.recall_threshold = ev_threshold;
    config.ba.max_iters = ev_iters;
    MapFile file = load_map(ev_map);
    if (!file.truth) throw Error(Errc::data, "map file has no ground truth");
    const auto map = build_map(std::move(file.data));
    const GroundTruth truth = file.truth->aligned(*map);

    SweepRow row;
    row.seed = ev_seed;
    std::vector<std::size_t> points;
    bool has_value = false;
    if (!ev_sel.empty()) {
      const SelectionFile s = load_selection(ev_sel);
      for (const PointId id : s.ids) points.push_back(map->point_index(id));
      row.kind = s.kind;
      row.select_seconds = s.seconds;
      row.gain_evals = s.gain_evals;
      const auto m = Method::parse(s.kind);
      has_value = m && (m->algo == Method::Algo::lazy || m->algo == Method::Algo::stochastic);
      row.utility = s.value;
    } else {
      const Method method = parse_method(ev_baseline);
      if (method.algo != Method::Algo::full && method.algo != Method::Algo::empty &&
          method.algo != Method::Algo::random) {
        throw Error(Errc::usage, "--baseline must be full, empty or random");
      }
      if (method.algo == Method::Algo::random && ev_budget.empty()) {
        throw Error(Errc::usage, "--baseline random needs --budget");
      }
      const Budget budget = ev_budget.empty() ? Budget{} : Budget::parse(ev_budget);
      const Selection s = run_method(make_problem(map, method, budget, config), method, config);
      points = s.points;
      row.kind = method.name();
      row.select_seconds = s.seconds;
      row.gain_evals = s.evaluations;
    }
    const EvalReport report = evaluate_selection(*map, truth, points, config);
    row.budget = points.size();
    row.ape_m = report.ape_rmse;
    row.rpe_rmse = report.rpe_per_delta.begin()->second;
    row.recall_proxy = report.recall_proxy;
    if (!has_value) row.utility = report.utility_values.at("odom");
    print_report(out, report, row);
    return 0;
  }

  if (sw->parsed()) {
    WorldSpec spec = sw_world.resolve();
    const RunConfig config = sw_run.resolve();
    std::vector<Method> kinds;
    for (const auto& k : split(sw_kinds)) kinds.push_back(parse_method(k));
    std::vector<Budget> budgets;
    for (const auto& b : split(sw_budgets)) budgets.push_back(Budget::parse(b));
    std::vector<std::uint64_t> seeds;
    if (!sw_seeds.empty()) {
      for (const auto& s : split(sw_seeds)) {
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
          throw Error(Errc::usage, "bad seed '" + s + "'");
        }
        seeds.push_back(v);
      }
    } else {
      for (std::size_t s = 1; s <= sw_seed_count; ++s) seeds.push_back(s);
    }
    if (kinds.empty() || budgets.empty() || seeds.empty()) {
      throw Error(Errc::usage, "sweep needs at least one kind, budget and seed");
    }
    const std::string csv = sweep_csv(budget_sweep(spec, kinds, budgets, seeds, config));
    if (sw_out.empty()) {
      out << csv;
    } else {
      write_file(sw_out, csv);
    }
    return 0;
  }

  if (val->parsed()) {
    const MapFile file = load_map(val_map);
    const auto diagnostics = validate(file.data);
    for (const auto& d : diagnostics) out << to_string(d.kind) << ": " << d.message << '\n';
    if (!diagnostics.empty()) return exit_code_for(Errc::data);
    out << "ok frames " << file.data.keyframes.size() << " points " << file.data.points.size()
        << " observations " << file.data.observations.size() << '\n';
    return 0;
  }
  return 2;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(argc, argv, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace mapselect::cli
