#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "armplan/env.hpp"
#include "armplan/policy.hpp"
#include "armplan/rng.hpp"

namespace armplan {

struct Transition {
  Eigen::VectorXf obs;
  Eigen::Matrix<float, 6, 1> action;  // pre-clamp sample
  float log_prob = 0.0f;
  float reward = 0.0f;
  float value = 0.0f;
  bool done = false;
  Outcome outcome = Outcome::Running;
};

// N*T transitions stored worker-major: index w * horizon + t.
struct RolloutSet {
  int workers = 0;
  int horizon = 0;
  MatX<float> obs;      // (input_dim, N*T)
  MatX<float> actions;  // (action_dim, N*T)
  VecX<float> log_probs;
  VecX<float> rewards;
  VecX<float> values;
  std::vector<uint8_t> dones;  // episode ended at this step
  std::vector<Outcome> outcomes;
  VecX<float> bootstrap;  // (N) value of the observation after the last step
  VecX<float> advantages;
  VecX<float> returns;

  Eigen::Index size() const { return static_cast<Eigen::Index>(workers) * horizon; }
};

struct TrainConfig {
  double gamma = 0.99;
  int minibatch = 256;
  double lr = 3e-4;
  double clip = 0.2;
  int max_episode_steps = kDefaultStepMax;
  double entropy_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  double gae_lambda = 0.95;
  int horizon = 2048;  // T per worker
  int epochs = 10;
  int workers = 4;
  uint64_t seed = 1;
  int64_t total_env_steps = 1'000'000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Early stop once the rolling success rate over stop_window episodes
  // reaches stop_success_rate (< 0 disables) while the curriculum radius is
  // at or below stop_rho_tilde.
  double stop_success_rate = -1.0;
  int stop_window = 100;
  double stop_rho_tilde = 1e9;
  NetworkSpec net;
  CurriculumParams curriculum;
};

// Single-sequence generalized advantage estimation; dones[t] marks episode
// termination at step t, bootstrap is V of the state after the last step.
void compute_gae(const VecX<float>& rewards, const VecX<float>& values,
                 const std::vector<uint8_t>& dones, float bootstrap, double gamma, double lambda,
                 VecX<float>& advantages, VecX<float>& returns);

void compute_gae(RolloutSet& rollouts, double gamma, double lambda);

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<VecX<float>> m;
  std::vector<VecX<float>> v;

  void init(PolicyNet<float>& params);
  void step(PolicyNet<float>& params, PolicyNet<float>& grads);
};

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double approx_kl = 0.0;
};

// Epochs x shuffled minibatches of clipped-surrogate + value regression with
// per-minibatch advantage normalization and global gradient-norm clipping.
UpdateMetrics ppo_update(const RolloutSet& rollouts, PolicyNet<float>& params,
                         const TrainConfig& cfg, Adam& opt, Rng& shuffle_rng);

// Empty scenario = randomized tasks.
struct TaskSpec {
  std::optional<ScenarioFile> scenario;
};

// Worker pool state threaded through rollout collection.
struct RolloutContext {
  std::vector<ArmEnv> envs;
  std::vector<Rng> rngs;  // per-env action/reset streams
  CurriculumState curriculum;
  TaskSpec task;
  MatX<float> current_obs;  // (input_dim, N)
  std::vector<double> episode_reward_accum;
  std::deque<int> recent_success;
  std::deque<double> recent_episode_reward;
  int stat_window = 100;
  int64_t episodes = 0;

  void note_episode(Outcome outcome, double total_reward);
  double success_rate() const;
  double mean_episode_reward() const;
};

RolloutContext make_rollout_context(const std::function<ArmEnv()>& env_factory,
                                    const TrainConfig& cfg, const TaskSpec& task);

RolloutSet collect_rollouts(RolloutContext& ctx, const PolicyNet<float>& params, int horizon);

struct IterationLog {
  int iteration = 0;
  int64_t env_steps = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  PolicyNet<float> params;
  std::vector<IterationLog> curve;
  int64_t env_steps = 0;
  int64_t episodes = 0;
  double final_success_rate = 0.0;
  bool stopped_early = false;
};

// Alternates rollout collection, GAE and the clipped update until the step
// budget (or the early-stop criterion) is reached; curriculum is updated on
// every episode end. Writes one CSV row per iteration when curve_csv is set.
TrainResult train(const TrainConfig& cfg, const std::function<ArmEnv()>& env_factory,
                  const TaskSpec& task, const std::string& curve_csv = "");

// Training config file (JSON) mirroring TrainConfig plus robot/task binding.
struct TrainFileConfig {
  TrainConfig train;
  std::string robot_config;
  std::string scenario;  // empty = random task
  EnvConfig env;
};

TrainFileConfig load_train_file(const std::string& path);

}  // namespace armplan
