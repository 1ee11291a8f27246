#include "armplan/kinematics.hpp"

#include <cmath>
#include <stdexcept>

#include "armplan/errors.hpp"

namespace armplan {

void RobotModel::validate() const {
  const int n = dof();
  if (n < 1) throw InvariantViolation("robot model: no DH rows");
  if (joint_min.size() != n || joint_max.size() != n)
    throw InvariantViolation("robot model: joint limit count != dof");
  for (int i = 0; i < n; ++i) {
    const auto& r = dh[i];
    if (!std::isfinite(r.theta_offset) || !std::isfinite(r.d) || !std::isfinite(r.a) ||
        !std::isfinite(r.alpha))
      throw InvariantViolation("robot model: non-finite DH row " + std::to_string(i));
    if (r.alpha <= -M_PI - 1e-12 || r.alpha > M_PI + 1e-12)
      throw InvariantViolation("robot model: alpha out of (-pi, pi] in row " + std::to_string(i));
    if (!(joint_min[i] < joint_max[i]))
      throw InvariantViolation("robot model: joint_min >= joint_max for joint " +
                               std::to_string(i));
  }
  for (const auto& c : capsules) {
    if (c.radius <= 0.0) throw InvariantViolation("robot model: capsule radius <= 0: " + c.name);
    if (c.frame != kToolFrame && (c.frame < 0 || c.frame > n))
      throw InvariantViolation("robot model: capsule frame out of range: " + c.name);
  }
  if (!is_rigid(ee_transform.linear()))
    throw InvariantViolation("robot model: ee_transform rotation not orthonormal");
  if (home.size() != 0 && home.size() != n)
    throw InvariantViolation("robot model: home configuration length != dof");
  if (max_joint_speed.size() == n && !(max_joint_speed.array() > 0.0).all())
    throw InvariantViolation("robot model: max_joint_speed must be positive");
}

Mat4 dh_transform(const DHRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Mat4 T;
  T << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return T;
}

Mat4 forward_kinematics_matrix(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof())
    throw std::invalid_argument("forward_kinematics: configuration length != dof");
  Mat4 T = Mat4::Identity();
  for (int i = 0; i < model.dof(); ++i) T = T * dh_transform(model.dh[i], q[i]);
  return T * model.ee_transform.matrix();
}

Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
  return Pose::from_matrix(forward_kinematics_matrix(model, q));
}

Pose frame_of_link(const RobotModel& model, const Eigen::VectorXd& q, int link_index) {
  if (q.size() != model.dof())
    throw std::invalid_argument("frame_of_link: configuration length != dof");
  if (link_index < 0 || link_index > model.dof())
    throw std::out_of_range("frame_of_link: link index " + std::to_string(link_index));
  Mat4 T = Mat4::Identity();
  for (int i = 0; i < link_index; ++i) T = T * dh_transform(model.dh[i], q[i]);
  return Pose::from_matrix(T);
}

Eigen::Isometry3d frame_transform(const RobotModel& model, const Eigen::VectorXd& q, int frame) {
  if (frame == kToolFrame) return forward_kinematics(model, q).isometry();
  return frame_of_link(model, q, frame).isometry();
}

Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& model,
                                                  const Eigen::VectorXd& q) {
  const int n = model.dof();
  if (q.size() != n) throw std::invalid_argument("jacobian: configuration length != dof");

  Eigen::Matrix<double, 6, Eigen::Dynamic> J(6, n);
  // Joint i rotates about the z axis of frame i-1.
  Mat4 T = Mat4::Identity();
  std::vector<Vec3> axis(n), origin(n);
  for (int i = 0; i < n; ++i) {
    axis[i] = T.block<3, 1>(0, 2);
    origin[i] = T.block<3, 1>(0, 3);
    T = T * dh_transform(model.dh[i], q[i]);
  }
  const Vec3 p_ee = (T * model.ee_transform.matrix()).block<3, 1>(0, 3);
  for (int i = 0; i < n; ++i) {
    J.block<3, 1>(0, i) = axis[i].cross(p_ee - origin[i]);
    J.block<3, 1>(3, i) = axis[i];
  }
  return J;
}

IKResult dls_ik(const RobotModel& model, const Eigen::VectorXd& q_current, const Pose& x_d,
                const IKParams& params) {
  if (q_current.size() != model.dof())
    throw std::invalid_argument("dls_ik: configuration length != dof");

  IKResult res;
  Eigen::VectorXd q_it = q_current;
  Vec6 x_e = pose_error(x_d, forward_kinematics(model, q_it), params.orientation_weight);

  const double lambda2 = params.lambda * params.lambda;
  do {
    const Vec6 x_dot = x_e / params.delta_dif;
    const auto J = jacobian(model, q_it);
    Eigen::Matrix<double, 6, 6> A = J * J.transpose();
    A.diagonal().array() += lambda2;  // SPD for lambda > 0
    const Eigen::VectorXd q_dot = J.transpose() * A.ldlt().solve(x_dot);
    q_it += q_dot * params.delta_int;
    if (params.clamp_to_limits) q_it = model.clamp_to_limits(q_it);
    x_e = pose_error(x_d, forward_kinematics(model, q_it), params.orientation_weight);
    ++res.iterations;
  } while (x_e.norm() > params.epsilon && res.iterations < params.max_iters);

  res.q = q_it;
  res.error_norm = x_e.norm();
  res.converged = res.error_norm <= params.epsilon;
  return res;
}

}  // namespace armplan
