#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "armplan/kinematics.hpp"
#include "armplan/robot_config.hpp"
#include "armplan/rng.hpp"
#include "armplan/scene.hpp"
#include "armplan/sensors.hpp"

namespace armplan {

inline constexpr double kActionBound = 0.005;  // m and rad
inline constexpr int kDefaultStepMax = 1024;

// Pose delta command: translation (m) and yaw/pitch/roll deltas (rad),
// every component clamped to [-kActionBound, kActionBound] on entry.
struct Action {
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double dyaw = 0.0, dpitch = 0.0, droll = 0.0;

  static Action from_vector(const Eigen::Matrix<double, 6, 1>& v) {
    Action a{v[0], v[1], v[2], v[3], v[4], v[5]};
    a.clamp();
    return a;
  }
  Eigen::Matrix<double, 6, 1> to_vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << dx, dy, dz, dyaw, dpitch, droll;
    return v;
  }
  void clamp() {
    auto c = [](double& x) { x = std::clamp(x, -kActionBound, kActionBound); };
    c(dx); c(dy); c(dz); c(dyaw); c(dpitch); c(droll);
  }
};

struct RewardBreakdown {
  double r_suc = 0.0;    // +10 on reaching the goal
  double r_c = 0.0;      // -10 on collision
  double r_d = 0.0;      // -0.01 * distance
  double r_shake = 0.0;  // -0.005 * n_s
  double r_o = 0.0;      // -10 outside the workspace
  double r_e = 0.0;      // -5 on step exhaustion
  double total = 0.0;    // exact sum of the six components
};

// Success boundary uses <= (the paper mixes < and <=; one convention is
// applied everywhere). The exhaustion term fires from the step_max-th step
// of an episode on (1-based step counter).
RewardBreakdown compute_reward(double d_t, bool collided, bool in_bounds, int step, int n_s,
                               double d_th, int step_max = kDefaultStepMax);

// Shake counter over the last <= 10 goal distances: pops the oldest entry
// before appending so the queue never exceeds 10, rebuilds the
// decreasing/non-decreasing bit list and counts adjacent changes.
int shake_count(std::deque<double>& dist_queue, double d_t);

struct CurriculumParams {
  double rho = 0.01;          // base target size, m
  double rho_max = 0.1;
  double rho_min = 0.01;
  double delta_plus = 0.001;  // growth per failing episode
  double delta_minus = 0.01;  // shrink per succeeding episode
  int e_zeta = 1000;          // episodes before adaptation starts
  double p_zeta = 0.9;        // success-rate threshold
  int k = 50;                 // history window
};

struct CurriculumState {
  CurriculumParams params;
  double rho_tilde = 0.01;      // current augmented size, m
  int episode = 0;              // completed episodes
  std::deque<int> history;      // last <= k outcomes

  static CurriculumState make(const CurriculumParams& p) {
    CurriculumState c;
    c.params = p;
    c.rho_tilde = p.rho;
    return c;
  }
};

// Records outcome S_e, advances the episode counter and applies the
// five-branch update, clamped to [rho_min, rho_max].
CurriculumState update_target_size(const CurriculumState& cur, int success);

enum class Outcome { Running, Success, Collision, OutOfBounds, Timeout };

const char* outcome_name(Outcome o);

struct EpisodeState {
  Eigen::VectorXd q;
  Scene scene;
  Vec3 goal = Vec3::Zero();
  int step_count = 0;
  std::deque<double> dist_queue;  // last <= 10 goal distances
  bool done = false;
  Outcome outcome = Outcome::Running;
  double d_th = 0.01;  // success radius frozen at reset
};

struct StepInfo {
  bool ik_failed = false;
  double d_t = 0.0;
  int n_s = 0;
  bool self_collision = false;
};

struct StepResult {
  Observation obs;
  RewardBreakdown reward;
  bool done = false;
  StepInfo info;
};

struct RandomTaskConfig {
  Vec3 bounds_min = Vec3(-0.9, -0.9, 0.0);
  Vec3 bounds_max = Vec3(0.9, 0.9, 1.2);
  double min_goal_start_distance = 0.1;  // m, forces a non-trivial reach
  int max_obstacles = 6;
  double success_to_add = 0.8;   // rolling success rate that adds an obstacle
  double success_to_remove = 0.3;
  int schedule_window = 50;
  double moving_fraction = 0.3;  // fraction of spawned obstacles that move
  double obstacle_speed = 0.2;   // m/s
  int goal_retries = 200;
  int obstacle_retries = 20;
};

struct EnvConfig {
  IKParams ik;
  double dt = 1.0 / 60.0;  // scene time per control step
  int step_max = kDefaultStepMax;
  RandomTaskConfig random_task;
};

// One manipulator reaching episode at a time; single-owner, deterministic
// under a fixed reset seed and action sequence.
class ArmEnv {
 public:
  ArmEnv(RobotDescription desc, EnvConfig cfg);

  // Scenario task: start/goal straight from the file. eval == true uses the
  // base target size rho as the success radius instead of rho_tilde.
  Observation reset(uint64_t seed, const CurriculumState& curriculum, const ScenarioFile& task,
                    bool eval = false, int goal_index = 0,
                    const std::optional<Eigen::VectorXd>& start_override = std::nullopt);

  // Randomized task: home start, random obstacles (count follows the success
  // schedule), goal sampled reachable and >= rho_tilde clear of obstacles.
  Observation reset_random(uint64_t seed, const CurriculumState& curriculum, bool eval = false);

  StepResult step(const Action& action);

  const EpisodeState& state() const { return state_; }
  const RobotModel& model() const { return desc_.model; }
  const BundleSet& bundles() const { return desc_.bundles; }
  const EnvConfig& config() const { return cfg_; }
  int obstacle_count() const { return obstacle_count_; }

  Pose ee_pose() const { return forward_kinematics(desc_.model, state_.q); }

 private:
  Observation start_episode(Eigen::VectorXd q, Scene scene, const Vec3& goal, double d_th);
  void note_episode_end(Outcome outcome);
  Scene spawn_random_scene(Rng& rng);
  Vec3 sample_goal(Rng& rng, const Scene& scene, double clearance);

  RobotDescription desc_;
  EnvConfig cfg_;
  EpisodeState state_;
  bool initialized_ = false;

  // Obstacle-count schedule driven by the rolling success rate.
  int obstacle_count_ = 0;
  std::deque<int> schedule_window_;
};

}  // namespace armplan
