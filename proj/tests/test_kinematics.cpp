#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "armplan/errors.hpp"
#include "armplan/kinematics.hpp"
#include "armplan/robot_config.hpp"
#include "armplan/rng.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace armplan;

namespace {

RobotModel single_joint_model() {
  RobotModel m;
  m.name = "one_joint";
  m.dh.push_back(DHRow{0.0, 0.0, 1.0, 0.0});  // revolute about base z, ee at (1,0,0)
  m.joint_min = Eigen::VectorXd::Constant(1, -M_PI);
  m.joint_max = Eigen::VectorXd::Constant(1, M_PI);
  return m;
}

Eigen::VectorXd random_config(const RobotModel& m, Rng& rng) {
  Eigen::VectorXd q(m.dof());
  for (int i = 0; i < m.dof(); ++i) q[i] = rng.uniform(m.joint_min[i], m.joint_max[i]);
  return q;
}

}  // namespace

TEST_CASE("dh_transform matches the printed layout on the zero-twist cases") {
  SUBCASE("all-zero row at q=0 is the identity") {
    const Mat4 T = dh_transform(DHRow{}, 0.0);
    CHECK((T - Mat4::Identity()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("pure z rotation by 90 degrees") {
    const Mat4 T = dh_transform(DHRow{0.0, 0.0, 0.0, 0.0}, M_PI / 2.0);
    CHECK(T(0, 0) == doctest::Approx(std::cos(M_PI / 2.0)).epsilon(1e-15));
    CHECK(T(0, 1) == doctest::Approx(-1.0));
    CHECK(T(1, 0) == doctest::Approx(1.0));
    CHECK(T.block<3, 1>(0, 3).norm() == doctest::Approx(0.0));
  }
  SUBCASE("pure translation along link x") {
    const Mat4 T = dh_transform(DHRow{0.0, 0.0, 1.0, 0.0}, 0.0);
    CHECK(T(0, 3) == doctest::Approx(1.0));
    CHECK(T(1, 3) == doctest::Approx(0.0));
    CHECK(T(2, 3) == doctest::Approx(0.0));
    CHECK((T.block<3, 3>(0, 0) - Mat3::Identity()).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("dh_transform rotation block is orthonormal with det +1") {
  Rng rng(101);
  for (int k = 0; k < 200; ++k) {
    DHRow row{rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
              rng.uniform(-M_PI, M_PI)};
    const Mat4 T = dh_transform(row, rng.uniform(-M_PI, M_PI));
    const Mat3 R = T.block<3, 3>(0, 0);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-12);
    CHECK((T.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dh_transform equals the elementary-factorization oracle") {
  Rng rng(102);
  for (int k = 0; k < 200; ++k) {
    DHRow row{rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
              rng.uniform(-M_PI, M_PI)};
    const double q = rng.uniform(-M_PI, M_PI);
    const Mat4 ours = dh_transform(row, q);
    const Mat4 ref = oracle::to_eigen(oracle::dh_link_oracle(row, q));
    CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("forward kinematics against the chain-product oracle") {
  SUBCASE("identity single-link model at q=0") {
    RobotModel m = single_joint_model();
    m.dh[0].a = 0.0;
    const Pose p = forward_kinematics(m, Eigen::VectorXd::Zero(1));
    CHECK(p.position.norm() == doctest::Approx(0.0));
    CHECK(p.orientation.angularDistance(Eigen::Quaterniond::Identity()) ==
          doctest::Approx(0.0));
  }

  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  SUBCASE("UR5 at the zero configuration") {
    const Eigen::VectorXd q = Eigen::VectorXd::Zero(6);
    const Mat4 ours = forward_kinematics_matrix(ur5.model, q);
    const Mat4 ref = oracle::to_eigen(oracle::chain_fk_oracle(ur5.model, q));
    CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-12);
    // Stretched pose of the classic UR5 parameter set (tool adds 0.10 m on z).
    CHECK(ours(0, 3) == doctest::Approx(-0.425 - 0.39225).epsilon(1e-9));
  }
  SUBCASE("100 random configurations within 1e-9") {
    Rng rng(103);
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd q = random_config(ur5.model, rng);
      const Mat4 ours = forward_kinematics_matrix(ur5.model, q);
      const Mat4 ref = oracle::to_eigen(oracle::chain_fk_oracle(ur5.model, q));
      CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(forward_kinematics(ur5.model, Eigen::VectorXd::Zero(5)),
                    std::invalid_argument);
  }
}

TEST_CASE("frame_of_link partial products") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  Rng rng(104);
  const Eigen::VectorXd q = random_config(ur5.model, rng);

  SUBCASE("link 0 is the base identity") {
    const Pose p = frame_of_link(ur5.model, q, 0);
    CHECK(p.position.norm() == doctest::Approx(0.0));
  }
  SUBCASE("link n composed with the tool equals forward kinematics") {
    const Mat4 chain = frame_of_link(ur5.model, q, 6).matrix() * ur5.model.ee_transform.matrix();
    const Mat4 fk = forward_kinematics_matrix(ur5.model, q);
    CHECK((chain - fk).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("intermediate link matches the truncated oracle") {
    for (int link = 1; link < 6; ++link) {
      const Mat4 ours = frame_of_link(ur5.model, q, link).matrix();
      const Mat4 ref = oracle::to_eigen(oracle::chain_fk_oracle(ur5.model, q, link));
      CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("index out of range throws") {
    CHECK_THROWS_AS(frame_of_link(ur5.model, q, 7), std::out_of_range);
    CHECK_THROWS_AS(frame_of_link(ur5.model, q, -1), std::out_of_range);
  }
}

TEST_CASE("jacobian") {
  SUBCASE("single revolute joint about base z with ee at (1,0,0)") {
    const RobotModel m = single_joint_model();
    const auto J = jacobian(m, Eigen::VectorXd::Zero(1));
    Vec6 expected;
    expected << 0, 1, 0, 0, 0, 1;
    CHECK((J.col(0) - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("J * 0 = 0") {
    const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
    Rng rng(105);
    const auto J = jacobian(ur5.model, random_config(ur5.model, rng));
    CHECK((J * Eigen::VectorXd::Zero(6)).norm() == 0.0);
  }
  SUBCASE("matches central finite differences at 100 random configurations") {
    const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
    Rng rng(106);
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd q = random_config(ur5.model, rng);
      const auto J = jacobian(ur5.model, q);
      const auto Jfd = oracle::fd_jacobian(ur5.model, q);
      CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("damped least squares IK") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  const RobotModel& m = ur5.model;
  const IKParams params;

  SUBCASE("target equal to the current pose is a fixed point") {
    const Eigen::VectorXd q = m.home;
    const IKResult res = dls_ik(m, q, forward_kinematics(m, q), params);
    CHECK(res.converged);
    CHECK(res.iterations == 1);
    CHECK(res.error_norm <= params.epsilon);
  }
  SUBCASE("1 mm displacement along base x converges") {
    const Eigen::VectorXd q = m.home;
    Pose target = forward_kinematics(m, q);
    target.position.x() += 0.001;
    const IKResult res = dls_ik(m, q, target, params);
    CHECK(res.converged);
    const Vec6 err = pose_error(target, forward_kinematics(m, res.q), params.orientation_weight);
    CHECK(err.norm() <= params.epsilon);
  }
  SUBCASE("unreachable 10 m target reports no convergence") {
    Pose target = forward_kinematics(m, m.home);
    target.position = Vec3(10.0, 0.0, 0.0);
    const IKResult res = dls_ik(m, m.home, target, params);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == params.max_iters);
  }
  SUBCASE("round trip from perturbed starts") {
    Rng rng(107);
    int converged = 0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
      const Eigen::VectorXd q = random_config(m, rng);
      Eigen::VectorXd start = q;
      for (int i = 0; i < 6; ++i) start[i] += rng.uniform(-0.1, 0.1);
      start = m.clamp_to_limits(start);
      const Pose target = forward_kinematics(m, q);
      const IKResult res = dls_ik(m, start, target, params);
      if (res.converged) {
        ++converged;
        const Vec6 err = pose_error(target, forward_kinematics(m, res.q), 1.0);
        CHECK(err.norm() <= params.epsilon);
      }
    }
    CHECK(converged == trials);
  }
  SUBCASE("damped system matrix is SPD with min eigenvalue >= lambda^2") {
    Rng rng(108);
    for (int k = 0; k < 50; ++k) {
      const auto J = jacobian(m, random_config(m, rng));
      Eigen::Matrix<double, 6, 6> A = J * J.transpose();
      A.diagonal().array() += params.lambda * params.lambda;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(A);
      CHECK(eig.eigenvalues().minCoeff() >= params.lambda * params.lambda - 1e-12);
    }
  }
  SUBCASE("deterministic: identical inputs give bit-identical outputs") {
    Rng rng(109);
    const Eigen::VectorXd q = random_config(m, rng);
    Pose target = forward_kinematics(m, m.home);
    target.position += Vec3(0.01, -0.02, 0.015);
    const IKResult a = dls_ik(m, q, target, params);
    const IKResult b = dls_ik(m, q, target, params);
    CHECK(a.q == b.q);
    CHECK(a.error_norm == b.error_norm);
  }
}

TEST_CASE("pose euler round trip") {
  Rng rng(110);
  for (int k = 0; k < 300; ++k) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    const Mat3 R = q.toRotationMatrix();
    const Mat3 back = rpy_to_matrix(matrix_to_rpy(R));
    CHECK((R - back).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("robot config validation and reach envelopes") {
  SUBCASE("UR5 reach envelope") {
    const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
    Rng rng(111);
    double max_reach = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const Eigen::VectorXd q = random_config(ur5.model, rng);
      max_reach = std::max(max_reach, forward_kinematics(ur5.model, q).position.norm());
    }
    CHECK(max_reach > 0.8);
    CHECK(max_reach < 1.2);
  }
  SUBCASE("KR16 reach envelope") {
    const auto kr16 = load_robot_config(test_config("robots/kr16.json"));
    Rng rng(112);
    double max_reach = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const Eigen::VectorXd q = random_config(kr16.model, rng);
      max_reach = std::max(max_reach, forward_kinematics(kr16.model, q).position.norm());
    }
    CHECK(max_reach > 1.4);
    CHECK(max_reach < 2.45);
  }
  SUBCASE("invariant violations throw") {
    const char* bad_limits = R"({
      "name": "bad", "dh_rows": [{"d": 0.1}],
      "joint_limits": [[1.0, -1.0]]
    })";
    CHECK_THROWS_AS(robot_from_json_text(bad_limits), InvariantViolation);
    const char* bad_radius = R"({
      "name": "bad", "dh_rows": [{"d": 0.1}],
      "joint_limits": [[-1.0, 1.0]],
      "link_capsules": [{"name": "c", "frame": 1, "p0": [0,0,0], "p1": [0,0,0.1], "radius": -0.1}]
    })";
    CHECK_THROWS_AS(robot_from_json_text(bad_radius), InvariantViolation);
  }
}
