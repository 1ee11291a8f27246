#include "armplan/env.hpp"

#include <algorithm>
#include <cmath>

#include "armplan/errors.hpp"

namespace armplan {

RewardBreakdown compute_reward(double d_t, bool collided, bool in_bounds, int step, int n_s,
                               double d_th, int step_max) {
  RewardBreakdown r;
  r.r_suc = d_t <= d_th ? 10.0 : 0.0;
  r.r_c = collided ? -10.0 : 0.0;
  r.r_d = -0.01 * d_t;
  r.r_shake = -0.005 * n_s;
  r.r_o = in_bounds ? 0.0 : -10.0;
  r.r_e = step >= step_max ? -5.0 : 0.0;
  r.total = r.r_suc + r.r_c + r.r_d + r.r_shake + r.r_o + r.r_e;
  return r;
}

int shake_count(std::deque<double>& dist_queue, double d_t) {
  if (dist_queue.size() >= 10) dist_queue.pop_front();
  dist_queue.push_back(d_t);
  int n_s = 0;
  int prev_bit = -1;
  for (size_t i = 0; i + 1 < dist_queue.size(); ++i) {
    const int bit = dist_queue[i + 1] - dist_queue[i] >= 0.0 ? 0 : 1;
    if (prev_bit >= 0 && bit != prev_bit) ++n_s;
    prev_bit = bit;
  }
  return n_s;
}

CurriculumState update_target_size(const CurriculumState& cur, int success) {
  const CurriculumParams& p = cur.params;
  CurriculumState next = cur;
  next.history.push_back(success != 0 ? 1 : 0);
  while (static_cast<int>(next.history.size()) > p.k) next.history.pop_front();
  next.episode = cur.episode + 1;

  double rho_new;
  if (next.episode < p.e_zeta) {
    rho_new = p.rho;
  } else {
    double eta = 0.0;
    for (int s : next.history) eta += s;
    eta /= static_cast<double>(next.history.size());
    if (eta < p.p_zeta && cur.rho_tilde < p.rho_max)
      rho_new = cur.rho_tilde + p.delta_plus;
    else if (eta >= p.p_zeta && cur.rho_tilde > p.rho_min)
      rho_new = cur.rho_tilde - p.delta_minus;
    else if (eta == 1.0 && cur.rho_tilde == p.rho)
      rho_new = p.rho;
    else
      rho_new = cur.rho_tilde;
  }
  next.rho_tilde = std::clamp(rho_new, p.rho_min, p.rho_max);
  return next;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::OutOfBounds: return "out_of_bounds";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

ArmEnv::ArmEnv(RobotDescription desc, EnvConfig cfg)
    : desc_(std::move(desc)), cfg_(std::move(cfg)) {
  desc_.model.validate();
}

Observation ArmEnv::start_episode(Eigen::VectorXd q, Scene scene, const Vec3& goal, double d_th) {
  state_ = EpisodeState{};
  state_.q = std::move(q);
  state_.scene = std::move(scene);
  state_.goal = goal;
  state_.d_th = d_th;
  initialized_ = true;
  return assemble_observation(desc_.model, state_.q, state_.goal, state_.scene, desc_.bundles);
}

Observation ArmEnv::reset(uint64_t /*seed*/, const CurriculumState& curriculum,
                          const ScenarioFile& task, bool eval, int goal_index,
                          const std::optional<Eigen::VectorXd>& start_override) {
  if (goal_index < 0 || goal_index >= static_cast<int>(task.goals.size()))
    throw std::out_of_range("env reset: goal index out of range");
  Eigen::VectorXd q = start_override            ? *start_override
                      : task.start.size() > 0   ? task.start
                                                : desc_.model.home;
  if (q.size() != desc_.model.dof())
    throw InvariantViolation("env reset: start configuration length != dof");
  Scene scene = task.scene;
  scene.sim_time = 0.0;
  const double d_th = eval ? curriculum.params.rho : curriculum.rho_tilde;
  return start_episode(std::move(q), std::move(scene), task.goals[goal_index], d_th);
}

Scene ArmEnv::spawn_random_scene(Rng& rng) {
  const RandomTaskConfig& rt = cfg_.random_task;
  Scene scene;
  scene.bounds_min = rt.bounds_min;
  scene.bounds_max = rt.bounds_max;

  for (int i = 0; i < obstacle_count_; ++i) {
    for (int attempt = 0; attempt < rt.obstacle_retries; ++attempt) {
      ObstaclePrimitive o;
      o.name = "plate_" + std::to_string(i);
      o.kind = ObstacleKind::Plate;
      Vec3 pos;
      for (int a = 0; a < 3; ++a)
        pos[a] = rng.uniform(rt.bounds_min[a] + 0.1, rt.bounds_max[a] - 0.1);
      const Vec3 rpy(rng.uniform(-M_PI, M_PI), rng.uniform(-0.5, 0.5), rng.uniform(-M_PI, M_PI));
      o.pose = Pose::from_rpy(pos, rpy);
      o.half_extents =
          Vec3(rng.uniform(0.08, 0.25), rng.uniform(0.005, 0.02), rng.uniform(0.08, 0.25));
      if (rng.uniform() < rt.moving_fraction) {
        const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        const double span = rng.uniform(0.15, 0.4);
        const double leg = span / rt.obstacle_speed;
        MotionTrack t;
        t.waypoints = {{0.0, pos}, {leg, pos + span * dir}, {2.0 * leg, pos}};
        t.loop = true;
        o.track = t;
      }
      Scene probe = scene;
      probe.obstacles.push_back(o);
      if (!check_robot_collision(probe, desc_.model, desc_.model.home).world_hit) {
        scene.obstacles.push_back(o);
        break;
      }
    }
  }
  return scene;
}

Vec3 ArmEnv::sample_goal(Rng& rng, const Scene& scene, double clearance) {
  const RandomTaskConfig& rt = cfg_.random_task;
  const Vec3 start_ee = forward_kinematics(desc_.model, desc_.model.home).position;
  for (int attempt = 0; attempt < rt.goal_retries; ++attempt) {
    // FK of a random in-limit configuration: reachable by construction.
    Eigen::VectorXd q(desc_.model.dof());
    for (int i = 0; i < desc_.model.dof(); ++i)
      q[i] = rng.uniform(desc_.model.joint_min[i], desc_.model.joint_max[i]);
    const Vec3 goal = forward_kinematics(desc_.model, q).position;
    if (!in_workspace(scene, goal)) continue;
    if ((goal - start_ee).norm() < rt.min_goal_start_distance) continue;
    bool clear = true;
    scene.for_each_box([&](const std::string&, const Box& b) {
      if (point_box_distance(goal, b) < clearance) clear = false;
    });
    if (clear) return goal;
  }
  throw UnreachableTask("env reset: no valid goal after " + std::to_string(rt.goal_retries) +
                        " samples");
}

Observation ArmEnv::reset_random(uint64_t seed, const CurriculumState& curriculum, bool eval) {
  Rng rng(seed);
  const Scene scene = spawn_random_scene(rng);
  const double d_th = eval ? curriculum.params.rho : curriculum.rho_tilde;
  const Vec3 goal = sample_goal(rng, scene, curriculum.rho_tilde);
  return start_episode(desc_.model.home, scene, goal, d_th);
}

void ArmEnv::note_episode_end(Outcome outcome) {
  const RandomTaskConfig& rt = cfg_.random_task;
  schedule_window_.push_back(outcome == Outcome::Success ? 1 : 0);
  while (static_cast<int>(schedule_window_.size()) > rt.schedule_window)
    schedule_window_.pop_front();
  if (static_cast<int>(schedule_window_.size()) == rt.schedule_window) {
    double rate = 0.0;
    for (int s : schedule_window_) rate += s;
    rate /= rt.schedule_window;
    if (rate >= rt.success_to_add && obstacle_count_ < rt.max_obstacles) {
      ++obstacle_count_;
      schedule_window_.clear();
    } else if (rate <= rt.success_to_remove && obstacle_count_ > 0) {
      --obstacle_count_;
      schedule_window_.clear();
    }
  }
}

StepResult ArmEnv::step(const Action& action) {
  if (!initialized_) throw StepAfterDone("env step: reset() has not been called");
  if (state_.done) throw StepAfterDone("env step: episode already finished");

  Action a = action;
  a.clamp();

  // Target pose = current ee pose displaced by the action.
  const Pose current = forward_kinematics(desc_.model, state_.q);
  const Vec3 target_pos = current.position + Vec3(a.dx, a.dy, a.dz);
  const Vec3 target_rpy = current.rpy() + Vec3(a.droll, a.dpitch, a.dyaw);
  const Pose target = Pose::from_rpy(target_pos, target_rpy);

  const IKResult ik = dls_ik(desc_.model, state_.q, target, cfg_.ik);
  StepInfo info;
  info.ik_failed = !ik.converged;
  if (ik.converged) state_.q = ik.q;  // unchanged on NoConvergence

  state_.scene = advance(state_.scene, cfg_.dt);
  state_.step_count += 1;

  const CollisionReport collision = check_robot_collision(state_.scene, desc_.model, state_.q);
  info.self_collision = collision.self_hit;
  const Pose ee = forward_kinematics(desc_.model, state_.q);
  const bool in_bounds = in_workspace(state_.scene, ee.position);
  info.d_t = (state_.goal - ee.position).norm();
  info.n_s = shake_count(state_.dist_queue, info.d_t);

  StepResult result;
  result.reward = compute_reward(info.d_t, collision.any(), in_bounds, state_.step_count,
                                 info.n_s, state_.d_th, cfg_.step_max);

  // Termination priority: collision > out_of_bounds > success > timeout.
  if (collision.any())
    state_.outcome = Outcome::Collision;
  else if (!in_bounds)
    state_.outcome = Outcome::OutOfBounds;
  else if (info.d_t <= state_.d_th)
    state_.outcome = Outcome::Success;
  else if (state_.step_count >= cfg_.step_max)
    state_.outcome = Outcome::Timeout;
  else
    state_.outcome = Outcome::Running;

  state_.done = state_.outcome != Outcome::Running;
  if (state_.done) note_episode_end(state_.outcome);

  result.obs =
      assemble_observation(desc_.model, state_.q, state_.goal, state_.scene, desc_.bundles);
  result.done = state_.done;
  result.info = info;
  return result;
}

}  // namespace armplan
