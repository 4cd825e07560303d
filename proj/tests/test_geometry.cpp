#include <doctest.h>

#include <random>

#include "mapselect/error.hpp"
#include "mapselect/geometry.hpp"

using namespace mapselect;

namespace {

Vec6 random_twist(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec6 t;
  for (int k = 0; k < 6; ++k) t[k] = u(rng);
  return t;
}

}  // namespace

TEST_CASE("SE3 exp of zero is identity and inverse composes to identity") {
  CHECK(SE3::exp(Vec6::Zero()).matrix().isApprox(Eigen::Matrix4d::Identity()));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const SE3 a = SE3::exp(random_twist(rng, 1.0));
    CHECK((a * a.inverse()).matrix().isApprox(Eigen::Matrix4d::Identity(), 1e-12));
    CHECK(a.orthonormality_error() < 1e-12);
  }
}

TEST_CASE("SE3 exp matches the matrix exponential of the twist") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec6 xi = random_twist(rng, 0.8);
    Eigen::Matrix4d hat = Eigen::Matrix4d::Zero();
    hat.topLeftCorner<3, 3>() = skew(xi.tail<3>());
    hat.topRightCorner<3, 1>() = xi.head<3>();
    // Truncated series; converges fast for |xi| < 1.
    Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
    for (int k = 1; k < 30; ++k) {
      term = term * hat / static_cast<double>(k);
      sum += term;
    }
    CHECK(SE3::exp(xi).matrix().isApprox(sum, 1e-12));
  }
}

TEST_CASE("stereo projection follows the rectified model") {
  const CameraIntrinsics cam{500, 450, 320, 240, 0.12};
  const Vec3 p(0.4, -0.3, 5.0);
  const Vec3 z = project_stereo(cam, SE3::identity(), p);
  CHECK(z.x() == doctest::Approx(500 * 0.4 / 5 + 320));
  CHECK(z.y() == doctest::Approx(450 * -0.3 / 5 + 240));
  CHECK(z.z() == doctest::Approx(500 * (0.4 - 0.12) / 5 + 320));
  const Vec2 m = project_mono(cam, SE3::identity(), p);
  CHECK(m.x() == doctest::Approx(z.x()));
  CHECK(m.y() == doctest::Approx(z.y()));
}

TEST_CASE("projection at or behind the depth floor is a numerical error") {
  const CameraIntrinsics cam{500, 500, 320, 240, 0.1};
  try {
    project_stereo(cam, SE3::identity(), Vec3(0, 0, -1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::numerical);
  }
  CHECK_THROWS_AS(project_mono(cam, SE3::identity(), Vec3(1, 1, 0)), Error);
  CHECK_THROWS_AS(observation_jacobian(cam, SE3::identity(), Vec3(0, 0, 1e-7), ObsKind::stereo), Error);
}

TEST_CASE("analytic Jacobians agree with central finite differences") {
  const CameraIntrinsics cam{420, 410, 300, 200, 0.15};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const SE3 pose = SE3::exp(random_twist(rng, 0.3));
    const Vec3 p = pose.inverse() * Vec3(u(rng), u(rng), 4.0 + u(rng));
    for (const ObsKind kind : {ObsKind::stereo, ObsKind::mono}) {
      const auto jac = observation_jacobian(cam, pose, p, kind);
      const int dim = measurement_dim(kind);
      CHECK(jac.meas_dim == dim);
      auto h_of = [&](const SE3& x, const Vec3& q) -> Vec3 {
        if (kind == ObsKind::stereo) return project_stereo(cam, x, q);
        const Vec2 m = project_mono(cam, x, q);
        return {m.x(), m.y(), 0.0};
      };
      for (int k = 0; k < 6; ++k) {
        Vec6 d = Vec6::Zero();
        d[k] = h;
        const Vec3 fd = (h_of(pose.perturbed(d), p) - h_of(pose.perturbed(-d), p)) / (2 * h);
        const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        worst = std::max(worst, (fd.head(dim) - jac.pose_block.col(k).head(dim)).cwiseAbs().maxCoeff() / scale);
      }
      for (int k = 0; k < 3; ++k) {
        Vec3 d = Vec3::Zero();
        d[k] = h;
        const Vec3 fd = (h_of(pose, p + d) - h_of(pose, p - d)) / (2 * h);
        const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        worst = std::max(worst, (fd.head(dim) - jac.point_block.col(k).head(dim)).cwiseAbs().maxCoeff() / scale);
      }
      if (kind == ObsKind::mono) {
        CHECK(jac.pose_block.row(2).isZero());
        CHECK(jac.point_block.row(2).isZero());
      }
    }
  }
  CHECK(worst < 1e-5);
}
