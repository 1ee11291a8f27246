#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace armplan {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rigid pose: position + unit quaternion, canonicalized to w >= 0 so that
// serialization and golden comparisons are stable.
struct Pose {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Pose() = default;
  Pose(const Vec3& p, const Eigen::Quaterniond& q) : position(p), orientation(q) {
    canonicalize();
  }

  static Pose from_matrix(const Mat4& T) {
    Pose out;
    out.position = T.block<3, 1>(0, 3);
    out.orientation = Eigen::Quaterniond(Mat3(T.block<3, 3>(0, 0)));
    out.canonicalize();
    return out;
  }

  static Pose from_parts(const Vec3& p, const Mat3& R) {
    Pose out;
    out.position = p;
    out.orientation = Eigen::Quaterniond(R);
    out.canonicalize();
    return out;
  }

  static Pose from_rpy(const Vec3& p, const Vec3& rpy);

  Mat3 rotation() const { return orientation.toRotationMatrix(); }

  Mat4 matrix() const {
    Mat4 T = Mat4::Identity();
    T.block<3, 3>(0, 0) = rotation();
    T.block<3, 1>(0, 3) = position;
    return T;
  }

  Eigen::Isometry3d isometry() const {
    Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
    iso.linear() = rotation();
    iso.translation() = position;
    return iso;
  }

  // Fixed-axis XYZ roll-pitch-yaw, i.e. R = Rz(yaw) * Ry(pitch) * Rx(roll).
  Vec3 rpy() const;

  Pose compose(const Pose& local) const {
    return Pose(position + orientation * local.position, orientation * local.orientation);
  }

  void canonicalize() {
    orientation.normalize();
    if (orientation.w() < 0.0) orientation.coeffs() *= -1.0;
  }
};

// R = Rz(yaw) * Ry(pitch) * Rx(roll); rpy = (roll, pitch, yaw).
Mat3 rpy_to_matrix(const Vec3& rpy);
Vec3 matrix_to_rpy(const Mat3& R);

// Axis * angle 3-vector of a rotation matrix (angle in [0, pi]).
Vec3 rotation_vector(const Mat3& R);

// 6-vector IK error [p_d - p_c ; w * rotvec(R_d R_c^T)].
Vec6 pose_error(const Pose& desired, const Pose& current, double orientation_weight = 1.0);

inline bool is_rigid(const Mat3& R, double tol = 1e-9) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
         std::abs(R.determinant() - 1.0) < tol;
}

}  // namespace armplan
