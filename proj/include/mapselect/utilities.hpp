#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "mapselect/linalg.hpp"
#include "mapselect/map_model.hpp"

namespace mapselect {

enum class UtilityKind { slam, local, odom, cover, combined };

const char* to_string(UtilityKind kind) noexcept;
/// Accepts "slam", "local", "odom"/"odometry", "cover", "combined"/"odom+cover".
std::optional<UtilityKind> parse_utility_kind(std::string_view name);

struct UtilityOptions {
  bool cache_contributions = true;
  std::size_t b_cover = 300;
};

/// Incremental set-function state: value(S), gain(i | S), commit(i).
///
/// Probe/commit phases: gain() is const and may be called concurrently from
/// any number of threads against a frozen state. commit() needs exclusive
/// access; calling it while a probe is in flight throws Errc::concurrency.
/// value(empty set) is 0 for every kind.
class Utility {
 public:
  explicit Utility(std::size_t num_points);
  Utility(const Utility& other);
  Utility& operator=(const Utility&) = delete;
  virtual ~Utility() = default;

  virtual UtilityKind kind() const = 0;
  virtual std::unique_ptr<Utility> clone() const = 0;

  std::size_t num_points() const { return in_set_.size(); }
  double value() const { return value_; }
  bool is_selected(std::size_t point) const { return in_set_.at(point) != 0; }
  /// Points in commit order.
  const std::vector<std::size_t>& selected() const { return order_; }

  /// f(S + i) - f(S) without mutating the state. Throws Errc::duplicate when
  /// i is already selected, Errc::lookup when out of range.
  double gain(std::size_t point) const;

  /// Adds i to S and returns the new value, which equals the previous value
  /// plus gain(i).
  double commit(std::size_t point);

 protected:
  virtual double compute_gain(std::size_t point) const = 0;
  /// Updates internal state and returns the gain that was applied.
  virtual double apply_commit(std::size_t point) = 0;

 private:
  void check_point(std::size_t point) const;

  std::vector<char> in_set_;
  std::vector<std::size_t> order_;
  double value_ = 0.0;
  mutable std::atomic<int> probes_in_flight_{0};
};

/// log det(eps I + sum Lambda^i) - 6t ln eps, maintained as a Cholesky factor.
class SlamUtility final : public Utility {
 public:
  SlamUtility(const SelectionProblem& problem, const UtilityOptions& options);
  UtilityKind kind() const override { return UtilityKind::slam; }
  std::unique_ptr<Utility> clone() const override;

  const CholFactor& factor() const { return factor_; }
  /// Number of commits that needed a from-scratch refactorization.
  std::size_t refactorizations() const { return refactorizations_; }

 protected:
  double compute_gain(std::size_t point) const override;
  double apply_commit(std::size_t point) override;

 private:
  std::shared_ptr<const MarginalInfo> marginal(std::size_t point) const;

  SelectionProblem problem_;
  std::shared_ptr<const std::vector<std::shared_ptr<const MarginalInfo>>> cache_;
  CholFactor factor_;
  Eigen::MatrixXd dense_;
  std::size_t refactorizations_ = 0;
};

/// Shared machinery of the localisation and odometry utilities: a 6x6
/// information matrix per frame and, per point, a list of (frame, 6x6 term).
class FrameBlockUtility : public Utility {
 public:
  struct Term {
    std::size_t frame;
    Mat6 info;
  };

  /// Current information matrix of a frame.
  const Mat6& frame_information(std::size_t frame) const { return frames_[frame]; }

 protected:
  FrameBlockUtility(const SelectionProblem& problem, const UtilityOptions& options);
  FrameBlockUtility(const FrameBlockUtility&) = default;

  /// Builds the terms for one point; must be pure and thread-safe.
  virtual void point_terms(std::size_t point, std::vector<Term>& out) const = 0;
  /// Must be called by derived constructors once point_terms is usable.
  void initialise(const std::vector<char>& active_frames);

  double compute_gain(std::size_t point) const override;
  double apply_commit(std::size_t point) override;

  SelectionProblem problem_;
  UtilityOptions options_;

 private:
  double gain_of(const std::vector<Term>& terms) const;
  const std::vector<Term>& terms_for(std::size_t point, std::vector<Term>& scratch) const;

  std::vector<Mat6> frames_;
  std::vector<double> frame_logdet_;
  // Cached terms in CSR layout (empty when caching is off).
  std::shared_ptr<const std::vector<std::size_t>> term_offsets_;
  std::shared_ptr<const std::vector<Term>> terms_;
};

/// Sum over frames of log det(eps I + sum_{i in S} A_ij^T Omega A_ij) - 6t ln eps.
class LocalUtility final : public FrameBlockUtility {
 public:
  LocalUtility(const SelectionProblem& problem, const UtilityOptions& options);
  UtilityKind kind() const override { return UtilityKind::local; }
  std::unique_ptr<Utility> clone() const override;

 protected:
  void point_terms(std::size_t point, std::vector<Term>& out) const override;
};

/// Sum over paired frames j of log det(Lambda_{x_j | x_{p_j}}) - 6 ln eps, using
/// only points stereo-observed in both frames of the pair.
class OdomUtility final : public FrameBlockUtility {
 public:
  OdomUtility(const SelectionProblem& problem, const UtilityOptions& options);
  UtilityKind kind() const override { return UtilityKind::odom; }
  std::unique_ptr<Utility> clone() const override;

  const std::vector<std::optional<std::size_t>>& pairs() const { return *pairs_; }

 protected:
  void point_terms(std::size_t point, std::vector<Term>& out) const override;

 private:
  std::shared_ptr<const std::vector<std::optional<std::size_t>>> pairs_;
};

/// (1/|L|) sum_{j in L} min(|S n V_j|, b_cover).
class CoverUtility final : public Utility {
 public:
  CoverUtility(const SelectionProblem& problem, std::size_t b_cover);
  UtilityKind kind() const override { return UtilityKind::cover; }
  std::unique_ptr<Utility> clone() const override;

  std::size_t b_cover() const { return b_cover_; }
  std::size_t num_loop_frames() const { return loop_frames_; }

 protected:
  double compute_gain(std::size_t point) const override;
  double apply_commit(std::size_t point) override;

 private:
  std::size_t uncovered_hits(std::size_t point) const;

  std::shared_ptr<const SlamMap> map_;
  std::vector<int> loop_slot_;  // frame slot -> position in counts_, -1 if not a loop frame
  std::vector<std::size_t> counts_;
  std::size_t loop_frames_ = 0;
  std::size_t b_cover_ = 0;
  std::size_t covered_ = 0;
};

/// f_odom(S)/f_odom(V) + f_cover(S)/f_cover(V).
class CombinedUtility final : public Utility {
 public:
  CombinedUtility(const SelectionProblem& problem, const UtilityOptions& options);
  CombinedUtility(const CombinedUtility& other);
  UtilityKind kind() const override { return UtilityKind::combined; }
  std::unique_ptr<Utility> clone() const override;

  const Utility& odom() const { return *odom_; }
  const Utility& cover() const { return *cover_; }
  double odom_normalizer() const { return odom_norm_; }
  double cover_normalizer() const { return cover_norm_; }

 protected:
  double compute_gain(std::size_t point) const override;
  double apply_commit(std::size_t point) override;

 private:
  std::unique_ptr<Utility> odom_;
  std::unique_ptr<Utility> cover_;
  double odom_norm_ = 1.0;
  double cover_norm_ = 1.0;
};

std::unique_ptr<Utility> make_slam_state(const SelectionProblem& problem,
                                         const UtilityOptions& options = {});
std::unique_ptr<Utility> make_local_state(const SelectionProblem& problem,
                                          const UtilityOptions& options = {});
std::unique_ptr<Utility> make_odom_state(const SelectionProblem& problem,
                                         const UtilityOptions& options = {});
std::unique_ptr<Utility> make_cover_state(const SelectionProblem& problem, std::size_t b_cover);
std::unique_ptr<Utility> make_combined_state(const SelectionProblem& problem,
                                             const UtilityOptions& options = {});
std::unique_ptr<Utility> make_utility(UtilityKind kind, const SelectionProblem& problem,
                                      const UtilityOptions& options = {});

}  // namespace mapselect
