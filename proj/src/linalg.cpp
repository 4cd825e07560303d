#include "mapselect/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "mapselect/error.hpp"

namespace mapselect {

double observation_weight(const Observation& obs, double noise_scale) {
  const double s = obs.sigma * noise_scale;
  return 1.0 / (s * s);
}

PointContribution point_joint_info(const SelectionProblem& problem, std::size_t point) {
  const SlamMap& map = problem.slam_map();
  const auto refs = map.point_observations(point);
  if (refs.empty()) {
    throw Error(Errc::data, "point " + std::to_string(map.points()[point].id) +
                                " has no observations");
  }
  PointContribution out;
  out.point = point;
  const Vec3& position = map.points()[point].position;

  int rows = 0;
  for (const auto& ref : refs) rows += measurement_dim(map.observations()[ref.observation].kind);
  out.pose_rows.setZero(rows, 6 * static_cast<Eigen::Index>(refs.size()));
  out.point_rows.setZero(rows, 3);

  int row = 0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& ref = refs[k];
    const Observation& obs = map.observations()[ref.observation];
    const auto jac = observation_jacobian(map.camera(), map.keyframes()[ref.frame].pose, position,
                                          obs.kind);
    const int dim = jac.meas_dim;
    const double w = observation_weight(obs, problem.noise_scale);
    const auto a = jac.pose_block.topRows(dim);
    const auto m = jac.point_block.topRows(dim);
    out.frames.push_back(ref.frame);
    out.pose_blocks.push_back(w * a.transpose() * a);
    out.coupling.push_back(w * a.transpose() * m);
    out.point_block += w * m.transpose() * m;
    out.pose_rows.block(row, 6 * static_cast<Eigen::Index>(k), dim, 6) = std::sqrt(w) * a;
    out.point_rows.middleRows(row, dim) = std::sqrt(w) * m;
    row += dim;
  }
  return out;
}

double default_damping(const Mat3& point_block) { return 1e-9 * point_block.trace() / 3.0; }

Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& c, const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& p, double damping) {
  Eigen::MatrixXd damped = p;
  damped.diagonal().array() += damping;
  Eigen::LLT<Eigen::MatrixXd> llt(damped);
  if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0)) {
    throw Error(Errc::numerical, "point block is rank deficient even with damping");
  }
  return c - b * llt.solve(b.transpose());
}

Eigen::MatrixXd schur_factor(const Eigen::MatrixXd& pose_rows, const Eigen::MatrixXd& point_rows,
                             double damping) {
  if (!(damping > 0.0)) throw Error(Errc::numerical, "point block is rank deficient even with damping");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(point_rows, Eigen::ComputeFullU);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd root = Eigen::VectorXd::Ones(point_rows.rows());
  for (Eigen::Index k = 0; k < s.size(); ++k) root[k] = std::sqrt(damping / (s[k] * s[k] + damping));
  return pose_rows.transpose() * svd.matrixU() * root.asDiagonal();
}

MarginalInfo schur_marginal(const PointContribution& contribution, double damping) {
  MarginalInfo out;
  out.frames = contribution.frames;
  out.factor = schur_factor(contribution.pose_rows, contribution.point_rows, damping);
  out.lambda = out.factor * out.factor.transpose();
  out.lambda = 0.5 * (out.lambda + out.lambda.transpose()).eval();
  return out;
}

double logdet(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw Error(Errc::numerical, "logdet of non-square matrix");
  if (matrix.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::numerical, "matrix is not positive definite");
  }
  const auto diag = llt.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 0)) throw Error(Errc::numerical, "matrix is not positive definite");
  return 2.0 * diag.array().log().sum();
}

double logdet6(const Mat6& matrix) {
  Eigen::LLT<Mat6> llt(matrix);
  const auto diag = llt.matrixLLT().diagonal();
  if (llt.info() != Eigen::Success || !(diag.minCoeff() > 0)) {
    throw Error(Errc::numerical, "6x6 information block is not positive definite");
  }
  return 2.0 * diag.array().log().sum();
}

CholFactor CholFactor::init(const Eigen::MatrixXd& matrix) {
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::numerical, "cannot factor: matrix is not positive definite");
  }
  CholFactor f;
  f.lower_ = llt.matrixL();
  if (!(f.lower_.diagonal().minCoeff() > 0)) {
    throw Error(Errc::numerical, "cannot factor: matrix is not positive definite");
  }
  f.refresh_logdet();
  return f;
}

Eigen::MatrixXd CholFactor::reconstruct() const { return lower_ * lower_.transpose(); }

void CholFactor::refresh_logdet() { logdet_ = 2.0 * lower_.diagonal().array().log().sum(); }

bool CholFactor::rank_one(Eigen::VectorXd x, double sign, std::size_t start) {
  const auto n = lower_.rows();
  for (auto k = static_cast<Eigen::Index>(start); k < n; ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const double lkk = lower_(k, k);
    const double r2 = lkk * lkk + sign * xk * xk;
    if (!(r2 > 0.0) || !std::isfinite(r2)) return false;
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double s = xk / lkk;
    lower_(k, k) = r;
    logdet_ += 2.0 * std::log(c);
    const auto tail = n - k - 1;
    if (tail == 0) continue;
    auto col = lower_.col(k).tail(tail);
    auto xt = x.tail(tail);
    col = (col + sign * s * xt) / c;
    xt = c * xt - s * col;
  }
  return true;
}

double CholFactor::lemma_gain(std::span<const std::size_t> frames, const Eigen::MatrixXd& g) const {
  if (frames.empty() || g.cols() == 0) return 0.0;
  const auto n = lower_.rows();
  const auto start = static_cast<Eigen::Index>(6 * frames.front());
  const auto len = n - start;

  // Z = L^{-1} E G; rows above `start` are zero because L is lower triangular.
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(len, g.cols());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    z.middleRows(static_cast<Eigen::Index>(6 * frames[k]) - start, 6) =
        g.middleRows(6 * static_cast<Eigen::Index>(k), 6);
  }
  lower_.bottomRightCorner(len, len).triangularView<Eigen::Lower>().solveInPlace(z);

  // det(A + E G G^T E^T) / det(A) = det(I + Z^T Z).
  Eigen::MatrixXd inner = z.transpose() * z;
  inner.diagonal().array() += 1.0;
  return mapselect::logdet(inner);
}

double chol_update(CholFactor& factor, const MarginalInfo& marginal) {
  const double before = factor.logdet();
  const auto n = static_cast<Eigen::Index>(factor.dim());
  const std::size_t start = 6 * marginal.frames.front();
  Eigen::VectorXd x(n);

  auto apply = [&](const Eigen::MatrixXd& cols, double sign) {
    for (Eigen::Index c = 0; c < cols.cols(); ++c) {
      x.setZero();
      for (std::size_t k = 0; k < marginal.frames.size(); ++k) {
        x.segment<6>(6 * static_cast<Eigen::Index>(marginal.frames[k])) =
            cols.col(c).segment<6>(6 * static_cast<Eigen::Index>(k));
      }
      if (!factor.rank_one(x, sign, start)) {
        throw Error(Errc::numerical, "Cholesky update broke down");
      }
    }
  };
  apply(marginal.factor, +1.0);
  factor.refresh_logdet();
  return factor.logdet() - before;
}

void scatter_add(Eigen::MatrixXd& dense, const MarginalInfo& marginal) {
  const auto m = marginal.frames.size();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      dense.block<6, 6>(6 * static_cast<Eigen::Index>(marginal.frames[a]),
                        6 * static_cast<Eigen::Index>(marginal.frames[b])) +=
          marginal.lambda.block<6, 6>(6 * static_cast<Eigen::Index>(a),
                                      6 * static_cast<Eigen::Index>(b));
    }
  }
}

double dense_logdet_oracle(const SelectionProblem& problem, std::span<const std::size_t> selected) {
  const std::size_t t = problem.num_frames();
  if (t > 20) throw Error(Errc::config, "dense log-det oracle is limited to t <= 20 frames");
  const auto dim = static_cast<Eigen::Index>(6 * t);
  Eigen::MatrixXd dense = problem.prior_epsilon * Eigen::MatrixXd::Identity(dim, dim);
  for (std::size_t point : selected) {
    if (problem.slam_map().is_orphan(point)) continue;
    scatter_add(dense, schur_marginal(point_joint_info(problem, point)));
  }
  return logdet(dense);
}

}  // namespace mapselect
