#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "armplan/baselines.hpp"
#include "armplan/robot_config.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace armplan;

namespace {

Scene open_scene() {
  Scene s;
  s.bounds_min = Vec3(-3, -3, -3);
  s.bounds_max = Vec3(3, 3, 3);
  return s;
}

Scene one_box(const Vec3& center, const Vec3& half) {
  Scene s = open_scene();
  ObstaclePrimitive o;
  o.name = "box";
  o.pose = Pose(center, Eigen::Quaterniond::Identity());
  o.half_extents = half;
  s.obstacles.push_back(o);
  return s;
}

bool path_spacing_ok(const JointPath& p, double step) {
  for (size_t i = 0; i + 1 < p.size(); ++i)
    if ((p[i + 1] - p[i]).norm() > step + 1e-9) return false;
  return true;
}

}  // namespace

TEST_CASE("goal_config") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  const RobotModel& m = ur5.model;

  SUBCASE("goal at the FK of a known free configuration resolves") {
    const Scene s = open_scene();
    const Vec3 goal = forward_kinematics(m, m.home).position;
    Rng rng(71);
    const auto q = goal_config(m, s, goal, rng);
    REQUIRE(q.has_value());
    CHECK((forward_kinematics(m, *q).position - goal).norm() <= 1e-4);
    CHECK_FALSE(check_robot_collision(s, m, *q).any());
  }
  SUBCASE("goal buried inside an obstacle fails") {
    const Vec3 goal(0.45, 0.0, 0.45);
    const Scene s = one_box(goal, Vec3(0.2, 0.2, 0.2));
    Rng rng(72);
    CHECK_FALSE(goal_config(m, s, goal, rng, 40).has_value());
  }
  SUBCASE("100 random free-space goals all resolve with verified FK") {
    const Scene s = open_scene();
    Rng rng(73);
    for (int k = 0; k < 100; ++k) {
      // Witness configuration must itself be collision-free, otherwise the
      // goal may only be reachable through self-collision.
      Eigen::VectorXd q(6);
      do {
        for (int i = 0; i < 6; ++i) q[i] = rng.uniform(m.joint_min[i], m.joint_max[i]);
      } while (check_robot_collision(s, m, q).any());
      const Vec3 goal = forward_kinematics(m, q).position;
      const auto res = goal_config(m, s, goal, rng);
      REQUIRE(res.has_value());
      CHECK((forward_kinematics(m, *res).position - goal).norm() <= 1e-4);
    }
  }
}

TEST_CASE("rrt_plan") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  const RobotModel& m = ur5.model;
  PlannerParams params;
  params.seed = 5;

  SUBCASE("identical start and goal give a single-config path") {
    const Scene s = open_scene();
    const PlanResult r = rrt_plan(m, s, m.home, m.home, params);
    CHECK(r.success);
    CHECK(r.path.size() == 1);
  }
  SUBCASE("nearby configurations in an empty scene") {
    const Scene s = open_scene();
    Eigen::VectorXd goal = m.home;
    goal[0] += 0.6;
    goal[2] -= 0.4;
    const PlanResult r = rrt_plan(m, s, m.home, goal, params);
    REQUIRE(r.success);
    CHECK(r.path.front() == m.home);
    CHECK(r.path.back() == goal);
    CHECK(path_spacing_ok(r.path, params.step_size));
    // Dense re-check at 10x finer resolution.
    CHECK(path_collision_free(m, s, r.path, params.collision_check_resolution / 10.0));
  }
  SUBCASE("goal enclosed by an obstacle is a planning failure") {
    PlannerParams quick = params;
    quick.max_iterations = 2000;
    Eigen::VectorXd goal = m.home;
    goal[1] += 0.5;
    const Vec3 goal_ee = forward_kinematics(m, goal).position;
    const Scene s = one_box(goal_ee, Vec3(0.25, 0.25, 0.25));
    const PlanResult r = rrt_plan(m, s, m.home, goal, quick);
    CHECK_FALSE(r.success);
  }
  SUBCASE("deterministic under a fixed seed") {
    const Scene s = load_scenario(test_config("scenes/exp1.json")).scene;
    const auto sc = load_scenario(test_config("scenes/exp1.json"));
    Rng rng(74);
    const auto qg = goal_config(m, s, sc.goals[0], rng, 100, 1e-4, &sc.start);
    REQUIRE(qg.has_value());
    const PlanResult a = rrt_plan(m, s, sc.start, *qg, params);
    const PlanResult b = rrt_plan(m, s, sc.start, *qg, params);
    REQUIRE(a.success);
    REQUIRE(b.success);
    REQUIRE(a.path.size() == b.path.size());
    for (size_t i = 0; i < a.path.size(); ++i) CHECK(a.path[i] == b.path[i]);
  }
}

TEST_CASE("birrt_plan") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  const RobotModel& m = ur5.model;
  PlannerParams params;
  params.seed = 6;

  SUBCASE("identical start and goal give a single-config path") {
    const Scene s = open_scene();
    const PlanResult r = birrt_plan(m, s, m.home, m.home, params);
    CHECK(r.success);
    CHECK(r.path.size() == 1);
  }
  SUBCASE("plate scene: valid path, balanced trees, exact endpoints") {
    const auto sc = load_scenario(test_config("scenes/exp1.json"));
    Rng rng(75);
    const auto qg = goal_config(m, sc.scene, sc.goals[0], rng, 100, 1e-4, &sc.start);
    REQUIRE(qg.has_value());
    const PlanResult r = birrt_plan(m, sc.scene, sc.start, *qg, params);
    REQUIRE(r.success);
    CHECK(r.path.front() == sc.start);
    CHECK(r.path.back() == *qg);
    CHECK(path_spacing_ok(r.path, std::max(params.step_size, params.connect_threshold)));
    CHECK(path_collision_free(m, sc.scene, r.path, params.collision_check_resolution / 10.0));
  }
  SUBCASE("empty-scene trees stay balanced within one extension") {
    const Scene s = open_scene();
    Eigen::VectorXd goal = m.home;
    goal[0] += 1.2;
    goal[1] += 0.4;
    const PlanResult r = birrt_plan(m, s, m.home, goal, params);
    REQUIRE(r.success);
    CHECK(std::abs(r.tree_size_start - r.tree_size_goal) <= 1);
  }
  SUBCASE("10-seed exp1 batch: at least RRT's success rate, fewer iterations on average") {
    const auto sc = load_scenario(test_config("scenes/exp1.json"));
    int rrt_ok = 0, bi_ok = 0;
    double rrt_iters = 0, bi_iters = 0;
    for (int seed = 0; seed < 10; ++seed) {
      Rng rng(800 + seed);
      const auto qg = goal_config(m, sc.scene, sc.goals[0], rng, 100, 1e-4, &sc.start);
      REQUIRE(qg.has_value());
      PlannerParams p = params;
      p.seed = rng.next_u64();
      const PlanResult a = rrt_plan(m, sc.scene, sc.start, *qg, p);
      const PlanResult b = birrt_plan(m, sc.scene, sc.start, *qg, p);
      rrt_ok += a.success;
      bi_ok += b.success;
      rrt_iters += a.iterations;
      bi_iters += b.iterations;
    }
    CHECK(bi_ok >= rrt_ok);
    CHECK(bi_iters <= rrt_iters);
  }
}

TEST_CASE("shortcut_smooth") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  const RobotModel& m = ur5.model;

  auto joint_length = [](const JointPath& p) {
    double len = 0.0;
    for (size_t i = 0; i + 1 < p.size(); ++i) len += (p[i + 1] - p[i]).norm();
    return len;
  };

  SUBCASE("straight path is unchanged") {
    const Scene s = open_scene();
    JointPath straight;
    for (int i = 0; i <= 10; ++i) {
      Eigen::VectorXd q = m.home;
      q[0] += 0.05 * i;
      straight.push_back(q);
    }
    Rng rng(76);
    const JointPath out = shortcut_smooth(straight, m, s, 50, rng);
    CHECK(joint_length(out) == doctest::Approx(joint_length(straight)).epsilon(1e-9));
  }
  SUBCASE("zigzag in an empty scene gets strictly shorter") {
    const Scene s = open_scene();
    JointPath zigzag;
    for (int i = 0; i <= 10; ++i) {
      Eigen::VectorXd q = m.home;
      q[0] += 0.05 * i;
      q[1] += (i % 2 == 0 ? 0.0 : 0.08);
      zigzag.push_back(q);
    }
    Rng rng(77);
    const JointPath out = shortcut_smooth(zigzag, m, s, 100, rng);
    CHECK(joint_length(out) < joint_length(zigzag));
  }
  SUBCASE("path hugging an obstacle stays collision-free") {
    const auto sc = load_scenario(test_config("scenes/exp1.json"));
    Rng rng(78);
    const auto qg = goal_config(m, sc.scene, sc.goals[0], rng, 100, 1e-4, &sc.start);
    REQUIRE(qg.has_value());
    PlannerParams p;
    p.seed = 79;
    const PlanResult r = birrt_plan(m, sc.scene, sc.start, *qg, p);
    REQUIRE(r.success);
    const JointPath smoothed = shortcut_smooth(r.path, m, sc.scene, 100, rng, 0.002);
    CHECK(joint_length(smoothed) <= joint_length(r.path) + 1e-9);
    CHECK(path_collision_free(m, sc.scene, smoothed, 0.0002));
  }
}

TEST_CASE("execute_path") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  const RobotModel& m = ur5.model;
  const double dt = 1.0 / 60.0;

  SUBCASE("single-config path has zero length and time") {
    const ExecutionResult r = execute_path(m, open_scene(), {m.home}, dt);
    CHECK(r.steps == 0);
    CHECK(r.sim_exec_seconds == 0.0);
    CHECK(r.ee_path_length == 0.0);
  }
  SUBCASE("two-config path length matches dense FK sampling") {
    Eigen::VectorXd a = m.home, b = m.home;
    b[0] += 0.4;
    const ExecutionResult r = execute_path(m, open_scene(), {a, b}, dt);
    REQUIRE(r.status == ExecutionResult::Status::Ok);
    double dense = 0.0;
    Vec3 prev = forward_kinematics(m, a).position;
    const int n = 4000;
    for (int i = 1; i <= n; ++i) {
      const Vec3 p = forward_kinematics(m, a + (b - a) * (static_cast<double>(i) / n)).position;
      dense += (p - prev).norm();
      prev = p;
    }
    CHECK(r.ee_path_length == doctest::Approx(dense).epsilon(1e-3));
    CHECK(r.sim_exec_seconds == doctest::Approx(r.steps * dt));
  }
  SUBCASE("a plate sweeping through a slow path causes a runtime collision") {
    const auto sc = load_scenario(test_config("scenes/exp3.json"));
    Rng rng(80);
    const auto qg = goal_config(m, sc.scene, sc.goals[0], rng, 100, 1e-4, &sc.start);
    REQUIRE(qg.has_value());
    PlannerParams p;
    p.seed = 81;
    const PlanResult plan = birrt_plan(m, sc.scene, sc.start, *qg, p);
    REQUIRE(plan.success);  // the t=0 snapshot looks clear
    const ExecutionResult r = execute_path(m, sc.scene, plan.path, dt);
    CHECK(r.status == ExecutionResult::Status::RuntimeCollision);
    CHECK(r.trajectory.outcome == "collision");
  }
}
