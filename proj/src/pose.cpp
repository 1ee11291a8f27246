#include "armplan/pose.hpp"

#include <cmath>

namespace armplan {

Mat3 rpy_to_matrix(const Vec3& rpy) {
  const Eigen::AngleAxisd roll(rpy[0], Vec3::UnitX());
  const Eigen::AngleAxisd pitch(rpy[1], Vec3::UnitY());
  const Eigen::AngleAxisd yaw(rpy[2], Vec3::UnitZ());
  return (yaw * pitch * roll).toRotationMatrix();
}

Vec3 matrix_to_rpy(const Mat3& R) {
  // R = Rz*Ry*Rx; singular at |pitch| = pi/2 where roll/yaw fold together.
  Vec3 rpy;
  const double sy = -R(2, 0);
  if (std::abs(sy) < 1.0 - 1e-12) {
    rpy[1] = std::asin(sy);
    rpy[0] = std::atan2(R(2, 1), R(2, 2));
    rpy[2] = std::atan2(R(1, 0), R(0, 0));
  } else {
    rpy[1] = std::copysign(M_PI / 2.0, sy);
    rpy[0] = std::atan2(-R(1, 2), R(1, 1));
    rpy[2] = 0.0;
  }
  return rpy;
}

Pose Pose::from_rpy(const Vec3& p, const Vec3& rpy) {
  return Pose(p, Eigen::Quaterniond(rpy_to_matrix(rpy)));
}

Vec3 Pose::rpy() const { return matrix_to_rpy(rotation()); }

Vec3 rotation_vector(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Vec6 pose_error(const Pose& desired, const Pose& current, double orientation_weight) {
  Vec6 e;
  e.head<3>() = desired.position - current.position;
  if (orientation_weight != 0.0) {
    const Mat3 dR = desired.rotation() * current.rotation().transpose();
    e.tail<3>() = orientation_weight * rotation_vector(dR);
  } else {
    e.tail<3>().setZero();
  }
  return e;
}

}  // namespace armplan
