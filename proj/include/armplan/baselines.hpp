#pragma once

#include <optional>
#include <string>
#include <vector>

#include "armplan/kinematics.hpp"
#include "armplan/rng.hpp"
#include "armplan/scene.hpp"
#include "armplan/trajectory.hpp"

namespace armplan {

struct PlannerParams {
  double step_size = 0.1;            // rad, joint-space extension
  double goal_bias = 0.05;           // probability of sampling the goal
  int max_iterations = 50000;
  double connect_threshold = 0.1;    // rad
  double collision_check_resolution = 0.002;  // rad, per-joint max between checks
  uint64_t seed = 0;
};

// Ordered configurations from start to goal; consecutive configs within the
// extension step and collision-free at the check resolution at plan time.
using JointPath = std::vector<Eigen::VectorXd>;

struct PlanResult {
  bool success = false;
  JointPath path;
  int iterations = 0;
  int tree_size_start = 0;
  int tree_size_goal = 0;  // zero for the single-tree planner
  double compute_seconds = 0.0;
};

// Straight joint-space segment collision test at the given resolution
// (endpoints included).
bool edge_collision_free(const RobotModel& model, const Scene& scene, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b, double resolution);

bool path_collision_free(const RobotModel& model, const Scene& scene, const JointPath& path,
                         double resolution);

// Collision-free configuration whose FK position reaches goal (position-only
// damped-least-squares with random restarts). The first attempts seed the
// solver from q_seed (default: home) so the solution stays in the caller's
// posture basin when possible. nullopt = NoGoalConfig.
std::optional<Eigen::VectorXd> goal_config(const RobotModel& model, const Scene& scene,
                                           const Vec3& goal, Rng& rng, int max_restarts = 100,
                                           double epsilon = 1e-4,
                                           const Eigen::VectorXd* q_seed = nullptr);

// Single-tree RRT with uniform joint-space sampling and goal biasing.
PlanResult rrt_plan(const RobotModel& model, const Scene& scene, const Eigen::VectorXd& q_start,
                    const Eigen::VectorXd& q_goal, const PlannerParams& params);

// Bidirectional RRT ("NC-RRT proxy"): trees from start and goal, one
// extension attempt per tree per round so both expand at the same rate.
PlanResult birrt_plan(const RobotModel& model, const Scene& scene, const Eigen::VectorXd& q_start,
                      const Eigen::VectorXd& q_goal, const PlannerParams& params);

// Random shortcutting; keeps the path collision-free, never lengthens it.
// Off by default in the benchmark for parity with raw sampled paths.
JointPath shortcut_smooth(const JointPath& path, const RobotModel& model, const Scene& scene,
                          int iterations, Rng& rng,
                          double resolution = 0.01);

struct ExecutionResult {
  enum class Status { Ok, RuntimeCollision };
  Status status = Status::Ok;
  Trajectory trajectory;
  double sim_exec_seconds = 0.0;   // steps * dt
  double ee_path_length = 0.0;     // m
  int steps = 0;
};

// Plays the path at dt resolution under the robot's joint speed limits while
// the scene advances; dynamic obstacles are collision-monitored every step.
ExecutionResult execute_path(const RobotModel& model, const Scene& scene, const JointPath& path,
                             double dt);

}  // namespace armplan
