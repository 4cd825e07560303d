#include "mapselect/geometry.hpp"

#include <cmath>
#include <string>

#include "mapselect/error.hpp"

namespace mapselect {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return s;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < 1e-10) return Mat3::Identity() + k + 0.5 * k * k;
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

SE3 SE3::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  SE3 out;
  out.rotation = q.normalized().toRotationMatrix();
  out.translation = t;
  return out;
}

SE3 SE3::exp(const Vec6& twist) {
  const Vec3 rho = twist.head<3>();
  const Vec3 omega = twist.tail<3>();
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  Mat3 v;
  if (theta < 1e-10) {
    v = Mat3::Identity() + 0.5 * k + k * k / 6.0;
  } else {
    const double t2 = theta * theta;
    v = Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * k +
        (theta - std::sin(theta)) / (t2 * theta) * k * k;
  }
  SE3 out;
  out.rotation = so3_exp(omega);
  out.translation = v * rho;
  return out;
}

SE3 SE3::operator*(const SE3& other) const {
  SE3 out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

SE3 SE3::inverse() const {
  SE3 out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Eigen::Matrix4d SE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double SE3::orthonormality_error() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(rotation.determinant() - 1.0);
  return std::max(ortho, det);
}

Vec3 transform_point(const SE3& pose, const Vec3& world_point) { return pose * world_point; }

namespace {

Vec3 camera_point_checked(const SE3& pose, const Vec3& world_point) {
  const Vec3 pc = pose * world_point;
  if (!(pc.z() > kDepthFloor)) {
    throw Error(Errc::numerical, "point behind camera (depth " + std::to_string(pc.z()) + ")");
  }
  return pc;
}

}  // namespace

Vec3 project_stereo(const CameraIntrinsics& cam, const SE3& pose, const Vec3& world_point) {
  const Vec3 pc = camera_point_checked(pose, world_point);
  const double inv_z = 1.0 / pc.z();
  return {cam.fx * pc.x() * inv_z + cam.cx,
          cam.fy * pc.y() * inv_z + cam.cy,
          cam.fx * (pc.x() - cam.baseline) * inv_z + cam.cx};
}

Vec2 project_mono(const CameraIntrinsics& cam, const SE3& pose, const Vec3& world_point) {
  return project_stereo(cam, pose, world_point).head<2>();
}

ObservationJacobian observation_jacobian(const CameraIntrinsics& cam, const SE3& pose,
                                         const Vec3& world_point, ObsKind kind) {
  const Vec3 pc = camera_point_checked(pose, world_point);
  const double x = pc.x(), y = pc.y(), z = pc.z();
  const double iz = 1.0 / z, iz2 = iz * iz;

  // d(measurement)/d(p_cam)
  Mat3 dproj;
  dproj << cam.fx * iz, 0, -cam.fx * x * iz2,
           0, cam.fy * iz, -cam.fy * y * iz2,
           cam.fx * iz, 0, -cam.fx * (x - cam.baseline) * iz2;

  // p_cam(delta) = exp(delta) p_cam ~ p_cam + rho + omega x p_cam
  Eigen::Matrix<double, 3, 6> dpc_dpose;
  dpc_dpose.leftCols<3>().setIdentity();
  dpc_dpose.rightCols<3>() = -skew(pc);

  ObservationJacobian jac;
  jac.meas_dim = measurement_dim(kind);
  jac.pose_block = dproj * dpc_dpose;
  jac.point_block = dproj * pose.rotation;
  if (kind == ObsKind::mono) {
    jac.pose_block.row(2).setZero();
    jac.point_block.row(2).setZero();
  }
  return jac;
}

}  // namespace mapselect
