#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "mapselect/greedy.hpp"
#include "mapselect/map_model.hpp"
#include "mapselect/utilities.hpp"

namespace mapselect::testing {

struct RandomMapOptions {
  std::size_t frames = 5;
  std::size_t points = 10;
  double observe_probability = 0.6;
  double mono_probability = 0.2;
  double loop_probability = 0.3;  // last frame is always a loop frame
  double sigma = 1.0;
  bool allow_orphans = false;
};

/// Small random stereo map: cameras strung along x looking at a point cloud.
std::shared_ptr<const SlamMap> random_map(std::mt19937_64& rng, const RandomMapOptions& options);

/// Uniformly random subset of {0..n-1} of the given size, ascending.
std::vector<std::size_t> random_subset(std::mt19937_64& rng, std::size_t n, std::size_t size);

/// Dense joint information over all poses and the given points, with each
/// point block damped exactly as the library damps it; the points are then
/// eliminated by explicit inversion. Returns log det(eps I + Lambda_x) - 6t ln eps.
double dense_slam_oracle(const SelectionProblem& problem, const std::vector<std::size_t>& points);

/// Sum over frames of log det(eps I + sum A^T Omega A) - 6 ln eps.
double dense_local_oracle(const SelectionProblem& problem, const std::vector<std::size_t>& points);

/// Pairing recomputed by brute force, then per pair the joint over
/// (x_p, x_j, points) built densely; the points are eliminated and the
/// x_j block taken as the conditional information.
double dense_odom_oracle(const SelectionProblem& problem, const std::vector<std::size_t>& points);

/// Coverage value by direct counting.
double dense_cover_oracle(const SlamMap& map, const std::vector<std::size_t>& points, std::size_t b_cover);

/// Modular utility: value = sum of weights.
class ModularUtility final : public Utility {
 public:
  explicit ModularUtility(std::vector<double> weights);
  UtilityKind kind() const override { return UtilityKind::cover; }
  std::unique_ptr<Utility> clone() const override { return std::make_unique<ModularUtility>(*this); }

 protected:
  double compute_gain(std::size_t point) const override { return weights_[point]; }
  double apply_commit(std::size_t point) override { return weights_[point]; }

 private:
  std::vector<double> weights_;
};

/// Evaluates the utility of a set from scratch with a fresh state.
double value_of(UtilityKind kind, const SelectionProblem& problem, const std::vector<std::size_t>& points,
                const UtilityOptions& options = {});

}  // namespace mapselect::testing
