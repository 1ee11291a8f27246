#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "armplan/pose.hpp"

namespace armplan {

// One Denavit-Hartenberg row. theta_offset is added to the joint variable.
struct DHRow {
  double theta_offset = 0.0;  // rad
  double d = 0.0;             // m
  double a = 0.0;             // m
  double alpha = 0.0;         // rad
};

// Frame index used by capsules and sensor mounts: 0..n are the chain frames
// (frame_of_link); kToolFrame is the end-effector frame after ee_transform.
constexpr int kToolFrame = -1;

struct Capsule {
  std::string name;
  int frame = 0;  // chain frame index or kToolFrame
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.05;
};

struct SensorMount {
  std::string name;  // "wrist" | "ee_surface" | "ee_tip"
  int frame = kToolFrame;
  Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
};

struct RobotModel {
  std::string name;
  std::vector<DHRow> dh;
  Eigen::VectorXd joint_min;
  Eigen::VectorXd joint_max;
  Eigen::Isometry3d ee_transform = Eigen::Isometry3d::Identity();  // fixed tool transform
  std::vector<Capsule> capsules;
  std::vector<SensorMount> mounts;
  Eigen::VectorXd home;             // neutral start configuration
  Eigen::VectorXd max_joint_speed;  // rad/s, used by path execution

  int dof() const { return static_cast<int>(dh.size()); }

  Eigen::VectorXd clamp_to_limits(const Eigen::VectorXd& q) const {
    return q.cwiseMax(joint_min).cwiseMin(joint_max);
  }
  bool within_limits(const Eigen::VectorXd& q, double tol = 1e-9) const {
    return (q.array() >= joint_min.array() - tol).all() &&
           (q.array() <= joint_max.array() + tol).all();
  }

  const SensorMount* find_mount(const std::string& mount_name) const {
    for (const auto& m : mounts)
      if (m.name == mount_name) return &m;
    return nullptr;
  }

  void validate() const;  // throws InvariantViolation
};

// Single-link homogeneous transform with theta = q + theta_offset.
Mat4 dh_transform(const DHRow& row, double q);

// Chain product of all link transforms times the tool transform.
Mat4 forward_kinematics_matrix(const RobotModel& model, const Eigen::VectorXd& q);
Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q);

// Partial chain product; link_index 0 is the base identity, n the last chain
// frame (before the tool transform). Throws std::out_of_range.
Pose frame_of_link(const RobotModel& model, const Eigen::VectorXd& q, int link_index);

// Resolves a frame index as used by Capsule/SensorMount (kToolFrame = FK pose).
Eigen::Isometry3d frame_transform(const RobotModel& model, const Eigen::VectorXd& q, int frame);

// Geometric Jacobian: rows 0-2 linear, rows 3-5 angular, base frame.
Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& model,
                                                  const Eigen::VectorXd& q);

struct IKParams {
  double lambda = 0.05;     // dampening factor
  double delta_int = 1.0;   // integration step
  double delta_dif = 1.0;   // differentiation step
  double epsilon = 1e-4;    // accuracy threshold on the mixed error norm
  int max_iters = 500;
  double orientation_weight = 1.0;  // 0 = position-only IK
  bool clamp_to_limits = true;
};

struct IKResult {
  Eigen::VectorXd q;
  double error_norm = 0.0;
  int iterations = 0;
  bool converged = false;  // false = NoConvergence (unreachable or ill-posed)
};

// Damped-least-squares IK: q_dot = J^T (J J^T + lambda^2 I)^-1 x_dot.
IKResult dls_ik(const RobotModel& model, const Eigen::VectorXd& q_current, const Pose& x_d,
                const IKParams& params);

}  // namespace armplan
