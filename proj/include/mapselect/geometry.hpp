#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mapselect {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

/// Minimum camera-frame depth (metres) at which projection and Jacobians are defined.
inline constexpr double kDepthFloor = 1e-6;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double baseline = 0.1;  // metres, left-to-right along camera x

  bool valid() const { return fx > 0 && fy > 0 && baseline > 0; }
};

/// Rigid transform. Keyframe poses store world->camera: p_cam = R p_world + t.
struct SE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static SE3 identity() { return {}; }
  static SE3 from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);

  /// Exponential map of a twist [translation; rotation].
  static SE3 exp(const Vec6& twist);

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  SE3 operator*(const SE3& other) const;
  SE3 inverse() const;

  Eigen::Matrix4d matrix() const;

  /// Applies a left-multiplied perturbation: exp(delta) * this.
  SE3 perturbed(const Vec6& delta) const { return exp(delta) * (*this); }

  /// Largest deviation of R^T R from identity and of det R from one.
  double orthonormality_error() const;
};

Mat3 skew(const Vec3& v);
Mat3 so3_exp(const Vec3& omega);

enum class ObsKind { stereo, mono };

constexpr int measurement_dim(ObsKind kind) { return kind == ObsKind::stereo ? 3 : 2; }

Vec3 transform_point(const SE3& pose, const Vec3& world_point);

/// (u_left, v, u_right). Throws Errc::numerical when depth <= kDepthFloor.
Vec3 project_stereo(const CameraIntrinsics& cam, const SE3& pose, const Vec3& world_point);

/// (u, v). Throws Errc::numerical when depth <= kDepthFloor.
Vec2 project_mono(const CameraIntrinsics& cam, const SE3& pose, const Vec3& world_point);

/// Measurement Jacobian at the given linearization point. Rows follow the
/// measurement layout; for mono only the first two rows are meaningful
/// (meas_dim == 2).
struct ObservationJacobian {
  Eigen::Matrix<double, 3, 6> pose_block = Eigen::Matrix<double, 3, 6>::Zero();
  Eigen::Matrix<double, 3, 3> point_block = Eigen::Matrix<double, 3, 3>::Zero();
  int meas_dim = 3;
};

/// Analytic Jacobian of the projection with respect to a left-multiplied twist
/// [translation; rotation] on the world->camera pose and to the world point.
ObservationJacobian observation_jacobian(const CameraIntrinsics& cam, const SE3& pose,
                                         const Vec3& world_point, ObsKind kind);

}  // namespace mapselect
