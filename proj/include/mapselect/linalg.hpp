#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

#include "mapselect/geometry.hpp"
#include "mapselect/map_model.hpp"

namespace mapselect {

/// Joint information of all poses and one map point, restricted to the frames
/// X_i that observe it. Pose blocks are block-diagonal because each
/// measurement touches a single pose.
struct PointContribution {
  std::size_t point = 0;
  std::vector<std::size_t> frames;   // X_i, ascending slots
  std::vector<Mat6> pose_blocks;     // C_i[j] = A^T Omega A
  std::vector<Mat63> coupling;       // B_i[j] = A^T Omega M
  Mat3 point_block = Mat3::Zero();   // P_i = sum_j M^T Omega M
  Eigen::MatrixXd pose_rows;         // Omega^{1/2} A, stacked (sum meas_dim x 6|X_i|)
  Eigen::MatrixXd point_rows;        // Omega^{1/2} M, stacked (sum meas_dim x 3)
};

/// Marginal pose information Lambda^i over X_i x X_i with a factor
/// Lambda^i = G G^T used by the Cholesky update.
struct MarginalInfo {
  std::vector<std::size_t> frames;
  Eigen::MatrixXd lambda;  // 6|X_i| x 6|X_i|
  Eigen::MatrixXd factor;  // G, 6|X_i| x sum meas_dim
};

/// Information weight of an observation: (sigma * noise_scale)^-2.
double observation_weight(const Observation& obs, double noise_scale);

/// Throws Errc::data for an orphan point.
PointContribution point_joint_info(const SelectionProblem& problem, std::size_t point);

/// 1e-9 * trace(P) / 3.
double default_damping(const Mat3& point_block);

/// C - B (P + damping I)^{-1} B^T for arbitrary conforming dense blocks.
/// Throws Errc::numerical when P + damping I is not positive definite.
Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& c, const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& p, double damping);

/// Square-root form of C - B (P + damping I)^{-1} B^T where C = J_x^T J_x,
/// B = J_x^T J_m, P = J_m^T J_m. With J_m = U S V^T (full U), the result is
/// G G^T for G = J_x^T U W^{1/2}, w_k = damping / (s_k^2 + damping) on the
/// range of J_m and 1 on its complement. No subtraction takes place, so
/// points whose information the landmark absorbs entirely yield ~0 instead
/// of cancellation noise.
Eigen::MatrixXd schur_factor(const Eigen::MatrixXd& pose_rows, const Eigen::MatrixXd& point_rows,
                             double damping);

MarginalInfo schur_marginal(const PointContribution& contribution, double damping);
inline MarginalInfo schur_marginal(const PointContribution& contribution) {
  return schur_marginal(contribution, default_damping(contribution.point_block));
}

/// Natural-log determinant of a symmetric positive definite matrix.
/// Throws Errc::numerical otherwise.
double logdet(const Eigen::MatrixXd& matrix);

/// Fixed-size fast path used by the per-frame utilities.
double logdet6(const Mat6& matrix);

/// Dense lower-triangular Cholesky factor with a running log-determinant.
class CholFactor {
 public:
  CholFactor() = default;

  /// Throws Errc::numerical when the matrix is not positive definite.
  static CholFactor init(const Eigen::MatrixXd& matrix);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.rows()); }
  double logdet() const { return logdet_; }
  const Eigen::MatrixXd& lower() const { return lower_; }
  Eigen::MatrixXd reconstruct() const;

  /// In-place rank-one update (sign = +1) or downdate (sign = -1) with x,
  /// which must be zero before row `start`. Returns false on breakdown, in
  /// which case the factor is left in an unspecified state.
  bool rank_one(Eigen::VectorXd x, double sign, std::size_t start = 0);

  /// Recomputes the running log-determinant from the diagonal.
  void refresh_logdet();

  /// log det(A + E G G^T E^T) - log det(A), where E scatters the 6-row
  /// blocks of G onto the given frame slots. Read-only.
  double lemma_gain(std::span<const std::size_t> frames, const Eigen::MatrixXd& g) const;

 private:
  Eigen::MatrixXd lower_;
  double logdet_ = 0.0;
};

/// Applies Lambda^i to the factor as rank-one updates with the columns of G.
/// Returns the change in log-determinant. Throws Errc::numerical on breakdown;
/// the caller must then rebuild the factor from scratch.
double chol_update(CholFactor& factor, const MarginalInfo& marginal);

/// Adds Lambda^i into a dense 6t x 6t matrix.
void scatter_add(Eigen::MatrixXd& dense, const MarginalInfo& marginal);

/// log det(eps I + sum_{i in S} Lambda^i) built densely. Intended for small
/// maps (t <= 20); throws Errc::config above that.
double dense_logdet_oracle(const SelectionProblem& problem,
                           std::span<const std::size_t> selected);

}  // namespace mapselect
