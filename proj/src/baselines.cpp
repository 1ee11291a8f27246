#include "armplan/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace armplan {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Eigen::VectorXd sample_config(const RobotModel& model, Rng& rng) {
  Eigen::VectorXd q(model.dof());
  for (int i = 0; i < model.dof(); ++i) q[i] = rng.uniform(model.joint_min[i], model.joint_max[i]);
  return q;
}

struct Tree {
  std::vector<Eigen::VectorXd> nodes;
  std::vector<int> parent;

  void add(const Eigen::VectorXd& q, int par) {
    nodes.push_back(q);
    parent.push_back(par);
  }

  int nearest(const Eigen::VectorXd& q) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (size_t i = 0; i < nodes.size(); ++i) {
      const double d = (nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  JointPath path_to_root(int idx) const {
    JointPath p;
    for (int i = idx; i >= 0; i = parent[i]) p.push_back(nodes[i]);
    return p;  // leaf -> root order
  }
};

Eigen::VectorXd steer(const Eigen::VectorXd& from, const Eigen::VectorXd& to, double step) {
  const double d = (to - from).norm();
  if (d <= step) return to;
  return from + (to - from) * (step / d);
}

}  // namespace

bool edge_collision_free(const RobotModel& model, const Scene& scene, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b, double resolution) {
  const double span = (b - a).cwiseAbs().maxCoeff();
  const int substeps = std::max(1, static_cast<int>(std::ceil(span / resolution)));
  for (int s = 0; s <= substeps; ++s) {
    const double u = static_cast<double>(s) / substeps;
    if (check_robot_collision(scene, model, a + u * (b - a)).any()) return false;
  }
  return true;
}

bool path_collision_free(const RobotModel& model, const Scene& scene, const JointPath& path,
                         double resolution) {
  for (size_t i = 0; i + 1 < path.size(); ++i)
    if (!edge_collision_free(model, scene, path[i], path[i + 1], resolution)) return false;
  return !path.empty() && !check_robot_collision(scene, model, path.front()).any();
}

std::optional<Eigen::VectorXd> goal_config(const RobotModel& model, const Scene& scene,
                                           const Vec3& goal, Rng& rng, int max_restarts,
                                           double epsilon, const Eigen::VectorXd* q_seed) {
  IKParams params;
  params.orientation_weight = 0.0;  // position goal, orientation free
  params.epsilon = epsilon;
  params.max_iters = 300;

  const Eigen::VectorXd base = q_seed ? *q_seed : model.home;
  Pose target;
  target.position = goal;
  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    Eigen::VectorXd seed = base;
    if (attempt > 0 && attempt <= max_restarts / 2) {
      // Jitter around the preferred posture before falling back to uniform.
      for (int i = 0; i < model.dof(); ++i) seed[i] += rng.uniform(-0.6, 0.6);
      seed = model.clamp_to_limits(seed);
    } else if (attempt > max_restarts / 2) {
      seed = sample_config(model, rng);
    }
    const IKResult res = dls_ik(model, seed, target, params);
    if (!res.converged) continue;
    if (!model.within_limits(res.q)) continue;
    if (check_robot_collision(scene, model, res.q).any()) continue;
    return res.q;
  }
  return std::nullopt;
}

PlanResult rrt_plan(const RobotModel& model, const Scene& scene, const Eigen::VectorXd& q_start,
                    const Eigen::VectorXd& q_goal, const PlannerParams& params) {
  PlanResult result;
  const double t0 = now_seconds();
  Rng rng(params.seed);

  if ((q_start - q_goal).norm() == 0.0) {
    result.success = true;
    result.path = {q_start};
    result.tree_size_start = 1;
    result.compute_seconds = now_seconds() - t0;
    return result;
  }

  Tree tree;
  tree.add(q_start, -1);

  for (int it = 0; it < params.max_iterations; ++it) {
    result.iterations = it + 1;
    Eigen::VectorXd target;
    if (rng.uniform() < params.goal_bias) {
      target = q_goal;
      if (rng.uniform() < 0.5) {
        // Jittered goal pulls vary the approach direction so a blocked
        // frontier node does not capture every biased extension.
        for (int i = 0; i < model.dof(); ++i) target[i] += rng.uniform(-0.4, 0.4);
        target = model.clamp_to_limits(target);
      }
    } else {
      target = sample_config(model, rng);
    }
    // Greedy extension: keep stepping toward the target while the edge stays
    // free, one tree node per step.
    int parent = tree.nearest(target);
    bool done = false;
    while (!done) {
      const Eigen::VectorXd q_new = steer(tree.nodes[parent], target, params.step_size);
      if (!edge_collision_free(model, scene, tree.nodes[parent], q_new,
                               params.collision_check_resolution))
        break;
      tree.add(q_new, parent);
      parent = static_cast<int>(tree.nodes.size()) - 1;

      if ((q_new - q_goal).norm() <= params.connect_threshold &&
          edge_collision_free(model, scene, q_new, q_goal,
                              params.collision_check_resolution)) {
        JointPath path = tree.path_to_root(parent);
        std::reverse(path.begin(), path.end());
        if ((path.back() - q_goal).norm() > 0.0) path.push_back(q_goal);
        result.success = true;
        result.path = std::move(path);
        done = true;
      }
      if (q_new == target) break;
    }
    if (done) break;
  }
  result.tree_size_start = static_cast<int>(tree.nodes.size());
  result.compute_seconds = now_seconds() - t0;
  return result;
}

PlanResult birrt_plan(const RobotModel& model, const Scene& scene, const Eigen::VectorXd& q_start,
                      const Eigen::VectorXd& q_goal, const PlannerParams& params) {
  PlanResult result;
  const double t0 = now_seconds();
  Rng rng(params.seed);

  if ((q_start - q_goal).norm() == 0.0) {
    result.success = true;
    result.path = {q_start};
    result.tree_size_start = 1;
    result.tree_size_goal = 1;
    result.compute_seconds = now_seconds() - t0;
    return result;
  }

  Tree tree_a, tree_b;  // a rooted at the start, b at the goal
  tree_a.add(q_start, -1);
  tree_b.add(q_goal, -1);
  bool a_is_start = true;

  for (int it = 0; it < params.max_iterations; ++it) {
    result.iterations = it + 1;
    // Mostly uniform samples; sometimes pull straight toward a node of the
    // other tree, which keeps the joined path from wandering.
    Eigen::VectorXd target;
    if (rng.uniform() < 0.3)
      target = tree_b.nodes[rng.uniform_int(0, static_cast<int>(tree_b.nodes.size()) - 1)];
    else
      target = sample_config(model, rng);

    // One extension per tree per round keeps both trees the same size.
    const int near_a = tree_a.nearest(target);
    const Eigen::VectorXd new_a = steer(tree_a.nodes[near_a], target, params.step_size);
    int idx_a = -1;
    if (edge_collision_free(model, scene, tree_a.nodes[near_a], new_a,
                            params.collision_check_resolution)) {
      tree_a.add(new_a, near_a);
      idx_a = static_cast<int>(tree_a.nodes.size()) - 1;
    }

    const Eigen::VectorXd& pull = idx_a >= 0 ? new_a : target;
    const int near_b = tree_b.nearest(pull);
    const Eigen::VectorXd new_b = steer(tree_b.nodes[near_b], pull, params.step_size);
    int idx_b = -1;
    if (edge_collision_free(model, scene, tree_b.nodes[near_b], new_b,
                            params.collision_check_resolution)) {
      tree_b.add(new_b, near_b);
      idx_b = static_cast<int>(tree_b.nodes.size()) - 1;
    }

    if (idx_a >= 0 && idx_b >= 0 && (new_a - new_b).norm() <= params.connect_threshold &&
        edge_collision_free(model, scene, new_a, new_b, params.collision_check_resolution)) {
      JointPath half_a = tree_a.path_to_root(idx_a);
      std::reverse(half_a.begin(), half_a.end());  // root(a) ... new_a
      JointPath half_b = tree_b.path_to_root(idx_b);  // new_b ... root(b)

      JointPath path = std::move(half_a);
      for (auto& q : half_b) path.push_back(std::move(q));
      if (!a_is_start) std::reverse(path.begin(), path.end());
      result.success = true;
      result.path = std::move(path);
      break;
    }

    std::swap(tree_a, tree_b);
    a_is_start = !a_is_start;
  }
  result.tree_size_start = static_cast<int>((a_is_start ? tree_a : tree_b).nodes.size());
  result.tree_size_goal = static_cast<int>((a_is_start ? tree_b : tree_a).nodes.size());
  result.compute_seconds = now_seconds() - t0;
  return result;
}

JointPath shortcut_smooth(const JointPath& path, const RobotModel& model, const Scene& scene,
                          int iterations, Rng& rng, double resolution) {
  if (path.size() < 3) return path;
  JointPath p = path;
  for (int it = 0; it < iterations; ++it) {
    if (p.size() < 3) break;
    const int i = rng.uniform_int(0, static_cast<int>(p.size()) - 3);
    const int j = rng.uniform_int(i + 2, static_cast<int>(p.size()) - 1);
    if (edge_collision_free(model, scene, p[i], p[j], resolution)) {
      JointPath next(p.begin(), p.begin() + i + 1);
      // Re-discretize the shortcut so consecutive configs stay within the
      // original step granularity.
      const double d = (p[j] - p[i]).norm();
      const int pieces = std::max(1, static_cast<int>(std::ceil(d / 0.1)));
      for (int s = 1; s < pieces; ++s)
        next.push_back(p[i] + (p[j] - p[i]) * (static_cast<double>(s) / pieces));
      next.insert(next.end(), p.begin() + j, p.end());
      p = std::move(next);
    }
  }
  return p;
}

ExecutionResult execute_path(const RobotModel& model, const Scene& scene, const JointPath& path,
                             double dt) {
  ExecutionResult result;
  if (path.empty()) return result;

  Scene world = scene;
  Eigen::VectorXd q = path.front();
  size_t next_wp = 1;

  auto record = [&](double t) {
    TrajectoryPoint p;
    p.t = t;
    p.q = q;
    p.ee = forward_kinematics(model, q);
    result.trajectory.points.push_back(std::move(p));
  };
  record(0.0);

  const Eigen::VectorXd max_step = model.max_joint_speed * dt;
  const double check_res = 0.002;  // rad, sub-step collision granularity
  int step = 0;
  while (next_wp < path.size()) {
    ++step;
    world = advance(world, dt);

    // Advance along the polyline under the per-joint speed limit, keeping
    // every traversed piece for collision monitoring (the motion follows the
    // waypoints, not the chord between dt samples).
    std::vector<Eigen::VectorXd> pieces{q};
    double budget = 1.0;
    while (next_wp < path.size() && budget > 0.0) {
      const Eigen::VectorXd delta = path[next_wp] - q;
      const double need = (delta.cwiseQuotient(max_step)).cwiseAbs().maxCoeff();
      if (need <= budget) {
        q = path[next_wp];
        ++next_wp;
        budget -= need;
      } else {
        q += delta * (budget / need);
        budget = 0.0;
      }
      pieces.push_back(q);
    }

    const Pose ee_prev = result.trajectory.points.back().ee;
    record(step * dt);
    result.ee_path_length +=
        (result.trajectory.points.back().ee.position - ee_prev.position).norm();

    bool hit = false;
    for (size_t i = 0; i + 1 < pieces.size() && !hit; ++i)
      hit = !edge_collision_free(model, world, pieces[i], pieces[i + 1], check_res);
    if (hit) {
      result.trajectory.points.back().collision = true;
      result.status = ExecutionResult::Status::RuntimeCollision;
      result.trajectory.outcome = "collision";
      break;
    }
  }
  result.steps = step;
  result.sim_exec_seconds = step * dt;
  if (result.status == ExecutionResult::Status::Ok) result.trajectory.outcome = "success";
  return result;
}

}  // namespace armplan
