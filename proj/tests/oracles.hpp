#pragma once

// Independent reference routines used by the unit and acceptance suites.
// These deliberately avoid the library's own code paths: plain-loop matrix
// products, finite differences, marching ray sampler, straight-line reward
// transcription. Keep them dumb.

#include <array>
#include <cmath>
#include <deque>
#include <vector>

#include "armplan/kinematics.hpp"
#include "armplan/scene.hpp"

namespace oracle {

using Mat4A = std::array<std::array<double, 4>, 4>;

inline Mat4A identity4() {
  Mat4A m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat4A mul4(const Mat4A& a, const Mat4A& b) {
  Mat4A out{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  return out;
}

// Link transform built from the elementary factorization
// Rz(theta) * Tz(d) * Tx(a) * Rx(alpha), multiplied out with plain loops.
inline Mat4A dh_link_oracle(const armplan::DHRow& row, double q) {
  const double t = q + row.theta_offset;
  Mat4A rz = identity4(), tz = identity4(), tx = identity4(), rx = identity4();
  rz[0][0] = std::cos(t);
  rz[0][1] = -std::sin(t);
  rz[1][0] = std::sin(t);
  rz[1][1] = std::cos(t);
  tz[2][3] = row.d;
  tx[0][3] = row.a;
  rx[1][1] = std::cos(row.alpha);
  rx[1][2] = -std::sin(row.alpha);
  rx[2][1] = std::sin(row.alpha);
  rx[2][2] = std::cos(row.alpha);
  return mul4(mul4(mul4(rz, tz), tx), rx);
}

inline Mat4A chain_fk_oracle(const armplan::RobotModel& model, const Eigen::VectorXd& q,
                             int upto = -1) {
  const int n = upto < 0 ? model.dof() : upto;
  Mat4A T = identity4();
  for (int i = 0; i < n; ++i) T = mul4(T, dh_link_oracle(model.dh[i], q[i]));
  if (upto < 0) {
    Mat4A tool{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) tool[i][j] = model.ee_transform.matrix()(i, j);
    T = mul4(T, tool);
  }
  return T;
}

inline Eigen::Matrix4d to_eigen(const Mat4A& m) {
  Eigen::Matrix4d out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = m[i][j];
  return out;
}

// Central-difference geometric Jacobian: position rows from FK positions,
// rotation rows from the small-angle rotation vector of R(q+h) R(q-h)^T.
inline Eigen::Matrix<double, 6, Eigen::Dynamic> fd_jacobian(const armplan::RobotModel& model,
                                                            const Eigen::VectorXd& q,
                                                            double h = 1e-6) {
  const int n = model.dof();
  Eigen::Matrix<double, 6, Eigen::Dynamic> J(6, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const Eigen::Matrix4d Tp = armplan::forward_kinematics_matrix(model, qp);
    const Eigen::Matrix4d Tm = armplan::forward_kinematics_matrix(model, qm);
    J.block<3, 1>(0, i) = (Tp.block<3, 1>(0, 3) - Tm.block<3, 1>(0, 3)) / (2.0 * h);
    const Eigen::Matrix3d dR = Tp.block<3, 3>(0, 0) * Tm.block<3, 3>(0, 0).transpose();
    J.block<3, 1>(3, i) = armplan::rotation_vector(dR) / (2.0 * h);
  }
  return J;
}

// Brute-force ray query: march along the ray in fixed steps and test point
// containment against every leaf box.
inline double marching_ray_fraction(const armplan::Scene& scene, const armplan::Vec3& origin,
                                    const armplan::Vec3& dir, double max_range,
                                    double step = 0.0005) {
  std::vector<armplan::Box> boxes;
  scene.for_each_box([&](const std::string&, const armplan::Box& b) { boxes.push_back(b); });
  const int steps = static_cast<int>(std::ceil(max_range / step));
  for (int k = 0; k <= steps; ++k) {
    const double t = std::min(k * step, max_range);
    const armplan::Vec3 p = origin + t * dir;
    for (const auto& b : boxes)
      if (armplan::point_in_box(p, b)) return t / max_range;
  }
  return 1.0;
}

// Straight-line transcription of the reward equations. The timeout term uses
// step >= step_max (1-based step counter); success uses <= (documented
// boundary convention).
inline double reward_total_oracle(double d_t, bool collided, bool in_bounds, int step, int n_s,
                                  double d_th, int step_max = 1024) {
  const double r_suc = d_t <= d_th ? 10.0 : 0.0;
  const double r_c = collided ? -10.0 : 0.0;
  const double r_d = -0.01 * d_t;
  const double r_shake = -0.005 * n_s;
  const double r_o = in_bounds ? 0.0 : -10.0;
  const double r_e = step >= step_max ? -5.0 : 0.0;
  return r_suc + r_c + r_d + r_shake + r_o + r_e;
}

// Hand-traced shake counter: pop-before-append bounded queue, rebuild the
// direction bit list, count adjacent changes.
struct ShakeOracle {
  std::deque<double> q;

  int push(double d_t) {
    if (q.size() >= 10) q.pop_front();
    q.push_back(d_t);
    std::vector<int> bits;
    for (size_t i = 0; i + 1 < q.size(); ++i) bits.push_back(q[i + 1] - q[i] >= 0.0 ? 0 : 1);
    int n_s = 0;
    for (size_t j = 0; j + 1 < bits.size(); ++j)
      if (bits[j] != bits[j + 1]) ++n_s;
    return n_s;
  }
};

// Discounted-sum advantage oracle for a single trajectory segment with no
// intermediate terminations (used for the lambda = 1 check).
inline std::vector<double> mc_advantages(const std::vector<double>& rewards,
                                         const std::vector<double>& values, double bootstrap,
                                         double gamma) {
  const size_t T = rewards.size();
  std::vector<double> adv(T);
  for (size_t t = 0; t < T; ++t) {
    double ret = 0.0, g = 1.0;
    for (size_t k = t; k < T; ++k) {
      ret += g * rewards[k];
      g *= gamma;
    }
    ret += g * bootstrap;
    adv[t] = ret - values[t];
  }
  return adv;
}

}  // namespace oracle
