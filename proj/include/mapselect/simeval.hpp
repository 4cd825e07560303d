#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapselect/coverage_ip.hpp"
#include "mapselect/greedy.hpp"
#include "mapselect/map_model.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect {

// ---------------------------------------------------------------------------
// Synthetic worlds

enum class TrajectoryShape { loop, figure_eight, corridor };

const char* to_string(TrajectoryShape shape) noexcept;
std::optional<TrajectoryShape> parse_shape(std::string_view name);

struct WorldSpec {
  TrajectoryShape shape = TrajectoryShape::loop;
  std::size_t frames = 60;
  std::size_t points_per_frame = 75;  // scattered points = points_per_frame * frames
  double frame_spacing = 2.0;         // metres between keyframes along the path
  double observation_radius = 12.0;   // max camera depth, metres
  double field_of_view_deg = 90.0;    // horizontal
  double loop_fraction = 0.2;         // trailing fraction of frames that revisit the start
  double sigma = 1.0;                 // pixel noise std-dev
  double mono_fraction = 0.1;         // extra observations forced to mono
  double wall_min = 2.0;              // lateral distance of scattered points from the path
  double wall_max = 6.0;
  double wall_height = 2.0;
  double pose_noise_m = 0.05;         // perturbation of stored estimates
  double pose_noise_deg = 0.5;
  double point_noise_m = 0.05;
  double min_disparity_px = 1.0;
  int image_width = 640;
  int image_height = 480;
  CameraIntrinsics camera{400.0, 400.0, 320.0, 240.0, 0.5};
  std::uint64_t seed = 1;
};

/// Ground truth aligned with the map's storage order (slots, point indices).
struct GroundTruth {
  std::vector<SE3> poses;
  std::vector<Vec3> points;
};

struct World {
  MapData data;
  GroundTruth truth;
};

/// Deterministic per (spec, seed). Throws Errc::config for an invalid spec and
/// Errc::data when no point ends up observed.
World generate_world(const WorldSpec& spec);

// ---------------------------------------------------------------------------
// Bundle adjustment

struct BaOptions {
  int max_iters = 20;
  double tol = 1e-10;              // relative cost decrease that ends iteration
  double pose_prior_weight = 0.0;  // pull toward stored poses; 0 disables
  int max_halvings = 12;
};

struct BaResult {
  std::vector<SE3> poses;            // all frames, slot order
  std::vector<Vec3> points;          // all points; unselected ones keep stored values
  std::vector<double> cost_history;  // cost before iteration 1, then after each accepted step
  int iterations = 0;
  double final_cost() const { return cost_history.back(); }
};

/// Gauss-Newton over poses 2..t and the selected points, with frame 1
/// anchored at its stored pose and step halving on cost increase. Selected
/// points that cannot be triangulated (a single mono observation) are left
/// out. Throws Errc::numerical naming frames that end up under-constrained.
BaResult gauss_newton_ba(const SlamMap& map, std::span<const std::size_t> selected,
                         const BaOptions& options = {});

// ---------------------------------------------------------------------------
// Metrics

/// RMSE of camera-centre positions after closed-form rigid alignment.
double ape(std::span<const SE3> estimated, std::span<const SE3> ground_truth);

/// RMSE over j of the translational part of (Q_j^-1 Q_{j+d})^-1 (P_j^-1 P_{j+d}),
/// with P/Q the camera-to-world estimated/true poses.
double rpe(std::span<const SE3> estimated, std::span<const SE3> ground_truth,
           std::size_t delta_frames);

inline constexpr std::size_t kDefaultRecallThreshold = 40;

/// Fraction of loop frames that keep at least `threshold` selected points.
double recall_proxy(const SlamMap& map, std::span<const std::size_t> selected,
                    std::size_t threshold = kDefaultRecallThreshold);

// ---------------------------------------------------------------------------
// Selection methods and evaluation runs

/// A utility optimized with lazy or stochastic greedy, or one of the baselines.
struct Method {
  enum class Algo { lazy, stochastic, random, ip, full, empty };
  Algo algo = Algo::lazy;
  UtilityKind utility = UtilityKind::odom;  // for lazy / stochastic

  std::string name() const;
  /// "odom", "local-stoch", "random", "ip100", "full", "empty", ...
  static std::optional<Method> parse(std::string_view name);
};

/// Absolute count or percentage of n.
struct Budget {
  double amount = 0.0;
  bool percent = false;

  /// ceil(amount / 100 * n) for percentages.
  std::size_t resolve(std::size_t n) const;
  std::string str() const;
  /// "300" or "15%"; throws Errc::usage.
  static Budget parse(std::string_view text);
};

struct RunConfig {
  double stochastic_epsilon = 0.05;
  std::size_t b_cover = 300;
  std::size_t ip_b = kIp100Coverage;
  double ip_lambda = kIp100Lambda;
  double prior_epsilon = 1e-4;
  double noise_scale = 1.0;
  bool cache_contributions = true;
  std::uint64_t seed = 1;  // stochastic and random methods
  std::size_t recall_threshold = kDefaultRecallThreshold;
  std::vector<std::size_t> rpe_deltas{1};
  BaOptions ba{20, 1e-10, 1e-6, 12};
  Exec exec = Exec::parallel;

  UtilityOptions utility_options() const { return {cache_contributions, b_cover}; }
};

/// Runs a method on a problem whose budget is already set; forced set honoured.
Selection run_method(const SelectionProblem& problem, const Method& method,
                     const RunConfig& config);

struct EvalReport {
  double ape_rmse = 0.0;
  std::map<std::size_t, double> rpe_per_delta;
  double recall_proxy = 0.0;
  std::map<std::string, double> utility_values;  // keyed by utility name
  double select_seconds = 0.0;
  std::size_t gain_evals = 0;
  double ba_final_cost = 0.0;
};

/// Bundle-adjusts the selected subset and scores it against ground truth.
EvalReport evaluate_selection(const SlamMap& map, const GroundTruth& truth,
                              std::span<const std::size_t> selected, const RunConfig& config);

struct SweepRow {
  std::string kind;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  double ape_m = 0.0;
  double rpe_rmse = 0.0;
  double recall_proxy = 0.0;
  double utility = 0.0;
  double select_seconds = 0.0;
  std::size_t gain_evals = 0;
};

/// One row per (seed, kind, budget), in that nesting order. Each seed
/// generates its own world from `spec` with spec.seed replaced.
std::vector<SweepRow> budget_sweep(const WorldSpec& spec, const std::vector<Method>& kinds,
                                   const std::vector<Budget>& budgets,
                                   const std::vector<std::uint64_t>& seeds,
                                   const RunConfig& config);

inline constexpr std::string_view kSweepCsvHeader =
    "kind,budget,seed,ape_m,rpe_rmse,recall_proxy,utility,select_seconds,gain_evals";

/// One CSV line (no newline), '.' decimal separator regardless of locale.
std::string to_csv(const SweepRow& row);

/// Header plus rows, newline terminated.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace mapselect
