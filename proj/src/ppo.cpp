#include "armplan/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "armplan/errors.hpp"
#include "armplan/robot_config.hpp"

namespace armplan {

using nlohmann::json;

void compute_gae(const VecX<float>& rewards, const VecX<float>& values,
                 const std::vector<uint8_t>& dones, float bootstrap, double gamma, double lambda,
                 VecX<float>& advantages, VecX<float>& returns) {
  const Eigen::Index T = rewards.size();
  if (values.size() != T || static_cast<Eigen::Index>(dones.size()) != T)
    throw std::invalid_argument("compute_gae: array length mismatch");
  advantages.resize(T);
  returns.resize(T);
  float gae = 0.0f;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const float nonterminal = dones[t] ? 0.0f : 1.0f;
    const float next_value = t == T - 1 ? bootstrap : values[t + 1];
    const float delta = rewards[t] +
                        static_cast<float>(gamma) * next_value * nonterminal - values[t];
    gae = delta + static_cast<float>(gamma * lambda) * nonterminal * gae;
    advantages[t] = gae;
    returns[t] = gae + values[t];
  }
}

void compute_gae(RolloutSet& r, double gamma, double lambda) {
  r.advantages.resize(r.size());
  r.returns.resize(r.size());
  for (int w = 0; w < r.workers; ++w) {
    const Eigen::Index off = static_cast<Eigen::Index>(w) * r.horizon;
    VecX<float> rew = r.rewards.segment(off, r.horizon);
    VecX<float> val = r.values.segment(off, r.horizon);
    std::vector<uint8_t> dn(r.dones.begin() + off, r.dones.begin() + off + r.horizon);
    VecX<float> adv, ret;
    compute_gae(rew, val, dn, r.bootstrap[w], gamma, lambda, adv, ret);
    r.advantages.segment(off, r.horizon) = adv;
    r.returns.segment(off, r.horizon) = ret;
  }
}

void Adam::init(PolicyNet<float>& params) {
  m.clear();
  v.clear();
  t = 0;
  for (const auto& b : params.param_blocks()) {
    m.push_back(VecX<float>::Zero(b.size));
    v.push_back(VecX<float>::Zero(b.size));
  }
}

void Adam::step(PolicyNet<float>& params, PolicyNet<float>& grads) {
  ++t;
  auto pb = params.param_blocks();
  auto gb = grads.param_blocks();
  const float b1 = static_cast<float>(beta1), b2 = static_cast<float>(beta2);
  const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t));
  const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t));
  for (size_t i = 0; i < pb.size(); ++i) {
    Eigen::Map<VecX<float>> p(pb[i].data, pb[i].size);
    Eigen::Map<VecX<float>> g(gb[i].data, gb[i].size);
    m[i] = b1 * m[i] + (1.0f - b1) * g;
    v[i] = b2 * v[i] + (1.0f - b2) * g.cwiseProduct(g);
    const VecX<float> mhat = m[i] / bc1;
    const VecX<float> vhat = v[i] / bc2;
    p -= static_cast<float>(lr) *
         (mhat.array() / (vhat.array().sqrt() + static_cast<float>(eps))).matrix();
  }
}

UpdateMetrics ppo_update(const RolloutSet& rollouts, PolicyNet<float>& params,
                         const TrainConfig& cfg, Adam& opt, Rng& shuffle_rng) {
  const Eigen::Index total = rollouts.size();
  std::vector<Eigen::Index> idx(total);
  std::iota(idx.begin(), idx.end(), 0);

  UpdateMetrics avg;
  int batches = 0;
  const LossSpec<float> loss{static_cast<float>(cfg.clip), static_cast<float>(cfg.vf_coef),
                             static_cast<float>(cfg.entropy_coef)};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the deterministic rng.
    for (Eigen::Index i = total - 1; i > 0; --i) {
      const Eigen::Index j = static_cast<Eigen::Index>(shuffle_rng.uniform() * (i + 1));
      std::swap(idx[i], idx[j]);
    }
    for (Eigen::Index start = 0; start + cfg.minibatch <= total; start += cfg.minibatch) {
      const Eigen::Index B = cfg.minibatch;
      Minibatch<float> mb;
      mb.obs.resize(rollouts.obs.rows(), B);
      mb.actions.resize(rollouts.actions.rows(), B);
      mb.old_logp.resize(B);
      mb.advantages.resize(B);
      mb.returns.resize(B);
      for (Eigen::Index k = 0; k < B; ++k) {
        const Eigen::Index s = idx[start + k];
        mb.obs.col(k) = rollouts.obs.col(s);
        mb.actions.col(k) = rollouts.actions.col(s);
        mb.old_logp[k] = rollouts.log_probs[s];
        mb.advantages[k] = rollouts.advantages[s];
        mb.returns[k] = rollouts.returns[s];
      }
      // Per-minibatch advantage normalization.
      const float mean = mb.advantages.mean();
      const float var = (mb.advantages.array() - mean).square().sum() / static_cast<float>(B);
      mb.advantages = ((mb.advantages.array() - mean) / (std::sqrt(var) + 1e-8f)).matrix();

      LossMetrics<float> lm;
      PolicyNet<float> grads = params.backward(mb, loss, &lm);
      if (!std::isfinite(lm.total))
        throw std::runtime_error("ppo_update: non-finite loss (divergence)");

      // Global gradient-norm clip.
      double norm_sq = 0.0;
      for (const auto& b : grads.param_blocks())
        norm_sq += Eigen::Map<const VecX<float>>(b.data, b.size).squaredNorm();
      const double norm = std::sqrt(norm_sq);
      if (norm > cfg.max_grad_norm && norm > 0.0) {
        const float scale = static_cast<float>(cfg.max_grad_norm / norm);
        for (auto& b : grads.param_blocks())
          Eigen::Map<VecX<float>>(b.data, b.size) *= scale;
      }
      opt.step(params, grads);

      avg.policy_loss += lm.policy_loss;
      avg.value_loss += lm.value_loss;
      avg.clip_fraction += lm.clip_fraction;
      avg.grad_norm += norm;
      avg.approx_kl += lm.approx_kl;
      ++batches;
    }
  }
  if (batches > 0) {
    avg.policy_loss /= batches;
    avg.value_loss /= batches;
    avg.clip_fraction /= batches;
    avg.grad_norm /= batches;
    avg.approx_kl /= batches;
  }
  return avg;
}

void RolloutContext::note_episode(Outcome outcome, double total_reward) {
  recent_success.push_back(outcome == Outcome::Success ? 1 : 0);
  recent_episode_reward.push_back(total_reward);
  while (static_cast<int>(recent_success.size()) > stat_window) recent_success.pop_front();
  while (static_cast<int>(recent_episode_reward.size()) > stat_window)
    recent_episode_reward.pop_front();
  ++episodes;
  curriculum = update_target_size(curriculum, outcome == Outcome::Success ? 1 : 0);
}

double RolloutContext::success_rate() const {
  if (recent_success.empty()) return 0.0;
  double s = 0.0;
  for (int v : recent_success) s += v;
  return s / static_cast<double>(recent_success.size());
}

double RolloutContext::mean_episode_reward() const {
  if (recent_episode_reward.empty()) return 0.0;
  double s = 0.0;
  for (double v : recent_episode_reward) s += v;
  return s / static_cast<double>(recent_episode_reward.size());
}

namespace {

void reset_env(RolloutContext& ctx, int w) {
  const uint64_t seed = ctx.rngs[w].next_u64();
  Observation obs;
  if (ctx.task.scenario)
    obs = ctx.envs[w].reset(seed, ctx.curriculum, *ctx.task.scenario);
  else
    obs = ctx.envs[w].reset_random(seed, ctx.curriculum);
  ctx.current_obs.col(w) = obs.to_vector().cast<float>();
  ctx.episode_reward_accum[w] = 0.0;
}

}  // namespace

RolloutContext make_rollout_context(const std::function<ArmEnv()>& env_factory,
                                    const TrainConfig& cfg, const TaskSpec& task) {
  RolloutContext ctx;
  ctx.task = task;
  ctx.curriculum = CurriculumState::make(cfg.curriculum);
  ctx.stat_window = cfg.stop_window;
  Rng master(cfg.seed);
  for (int w = 0; w < cfg.workers; ++w) {
    ctx.envs.push_back(env_factory());
    ctx.rngs.push_back(master.fork());
  }
  ctx.current_obs.resize(cfg.net.input_dim, cfg.workers);
  ctx.episode_reward_accum.assign(cfg.workers, 0.0);
  for (int w = 0; w < cfg.workers; ++w) reset_env(ctx, w);
  return ctx;
}

RolloutSet collect_rollouts(RolloutContext& ctx, const PolicyNet<float>& params, int horizon) {
  const int N = static_cast<int>(ctx.envs.size());
  const int input_dim = params.spec.input_dim;
  const int action_dim = params.spec.action_dim;

  RolloutSet r;
  r.workers = N;
  r.horizon = horizon;
  r.obs.resize(input_dim, static_cast<Eigen::Index>(N) * horizon);
  r.actions.resize(action_dim, static_cast<Eigen::Index>(N) * horizon);
  r.log_probs.resize(r.size());
  r.rewards.resize(r.size());
  r.values.resize(r.size());
  r.dones.assign(r.size(), 0);
  r.outcomes.assign(r.size(), Outcome::Running);
  r.bootstrap = VecX<float>::Zero(N);

  MatX<float> means;
  VecX<float> values;
  for (int t = 0; t < horizon; ++t) {
    params.forward(ctx.current_obs, means, values);
    for (int w = 0; w < N; ++w) {
      const Eigen::Index s = static_cast<Eigen::Index>(w) * horizon + t;
      r.obs.col(s) = ctx.current_obs.col(w);
      r.values[s] = values[w];

      VecX<float> sample;
      float logp;
      params.sample_action(means.col(w), ctx.rngs[w], sample, logp);
      r.actions.col(s) = sample;
      r.log_probs[s] = logp;

      const Action act = Action::from_vector(sample.cast<double>());
      const StepResult sr = ctx.envs[w].step(act);
      r.rewards[s] = static_cast<float>(sr.reward.total);
      r.dones[s] = sr.done ? 1 : 0;
      r.outcomes[s] = ctx.envs[w].state().outcome;
      ctx.episode_reward_accum[w] += sr.reward.total;

      if (sr.done) {
        ctx.note_episode(ctx.envs[w].state().outcome, ctx.episode_reward_accum[w]);
        reset_env(ctx, w);
      } else {
        ctx.current_obs.col(w) = sr.obs.to_vector().cast<float>();
      }
    }
  }
  params.forward(ctx.current_obs, means, values);
  r.bootstrap = values;
  return r;
}

TrainResult train(const TrainConfig& cfg, const std::function<ArmEnv()>& env_factory,
                  const TaskSpec& task, const std::string& curve_csv) {
  TrainResult result;
  result.params = PolicyNet<float>::init(cfg.net, cfg.seed);
  Adam opt;
  opt.lr = cfg.lr;
  opt.beta1 = cfg.adam_beta1;
  opt.beta2 = cfg.adam_beta2;
  opt.eps = cfg.adam_eps;
  opt.init(result.params);
  Rng shuffle_rng(cfg.seed ^ 0x5bf03635u);

  RolloutContext ctx = make_rollout_context(env_factory, cfg, task);

  std::ofstream csv;
  if (!curve_csv.empty()) {
    csv.open(curve_csv);
    csv << "iteration,env_steps,mean_reward,success_rate,policy_loss,value_loss,clip_fraction\n";
  }

  const int64_t steps_per_iter = static_cast<int64_t>(cfg.workers) * cfg.horizon;
  int iteration = 0;
  while (result.env_steps < cfg.total_env_steps) {
    ++iteration;
    RolloutSet rollouts = collect_rollouts(ctx, result.params, cfg.horizon);
    compute_gae(rollouts, cfg.gamma, cfg.gae_lambda);
    const UpdateMetrics um = ppo_update(rollouts, result.params, cfg, opt, shuffle_rng);
    result.env_steps += steps_per_iter;

    IterationLog log;
    log.iteration = iteration;
    log.env_steps = result.env_steps;
    log.mean_reward = ctx.mean_episode_reward();
    log.success_rate = ctx.success_rate();
    log.policy_loss = um.policy_loss;
    log.value_loss = um.value_loss;
    log.clip_fraction = um.clip_fraction;
    result.curve.push_back(log);
    if (csv.is_open()) {
      csv << log.iteration << ',' << log.env_steps << ',' << log.mean_reward << ','
          << log.success_rate << ',' << log.policy_loss << ',' << log.value_loss << ','
          << log.clip_fraction << '\n';
      csv.flush();
    }

    if (cfg.stop_success_rate >= 0.0 &&
        static_cast<int>(ctx.recent_success.size()) >= cfg.stop_window &&
        ctx.success_rate() >= cfg.stop_success_rate &&
        ctx.curriculum.rho_tilde <= cfg.stop_rho_tilde) {
      result.stopped_early = true;
      break;
    }
  }

  result.episodes = ctx.episodes;
  result.final_success_rate = ctx.success_rate();
  return result;
}

TrainFileConfig load_train_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("train config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }

  TrainFileConfig out;
  try {
    out.robot_config = j.at("robot").get<std::string>();
    out.scenario = j.value("scenario", "");
    TrainConfig& t = out.train;
    t.gamma = j.value("gamma", t.gamma);
    t.minibatch = j.value("batch_size", t.minibatch);
    t.lr = j.value("learning_rate", t.lr);
    t.clip = j.value("clip_range", t.clip);
    t.max_episode_steps = j.value("max_episode_steps", t.max_episode_steps);
    t.entropy_coef = j.value("entropy_coef", t.entropy_coef);
    t.vf_coef = j.value("vf_coef", t.vf_coef);
    t.max_grad_norm = j.value("max_grad_norm", t.max_grad_norm);
    t.gae_lambda = j.value("gae_lambda", t.gae_lambda);
    t.horizon = j.value("horizon", t.horizon);
    t.epochs = j.value("epochs", t.epochs);
    t.workers = j.value("workers", t.workers);
    t.seed = j.value("seed", t.seed);
    t.total_env_steps = j.value("total_env_steps", t.total_env_steps);
    t.stop_success_rate = j.value("stop_success_rate", t.stop_success_rate);
    t.stop_window = j.value("stop_window", t.stop_window);
    t.stop_rho_tilde = j.value("stop_rho_tilde", t.stop_rho_tilde);
    if (j.contains("network")) {
      const auto& n = j.at("network");
      t.net.shared_layers = n.value("shared_layers", t.net.shared_layers);
      t.net.actor_head = n.value("actor_head", t.net.actor_head);
      t.net.critic_head = n.value("critic_head", t.net.critic_head);
    }
    if (j.contains("curriculum")) {
      const auto& c = j.at("curriculum");
      t.curriculum.rho = c.value("rho", t.curriculum.rho);
      t.curriculum.rho_max = c.value("rho_max", t.curriculum.rho_max);
      t.curriculum.rho_min = c.value("rho_min", t.curriculum.rho_min);
      t.curriculum.delta_plus = c.value("delta_plus", t.curriculum.delta_plus);
      t.curriculum.delta_minus = c.value("delta_minus", t.curriculum.delta_minus);
      t.curriculum.e_zeta = c.value("e_zeta", t.curriculum.e_zeta);
      t.curriculum.p_zeta = c.value("p_zeta", t.curriculum.p_zeta);
      t.curriculum.k = c.value("k", t.curriculum.k);
    }
    if (j.contains("env")) {
      const auto& e = j.at("env");
      out.env.dt = e.value("dt", out.env.dt);
      out.env.step_max = e.value("step_max", out.env.step_max);
      if (e.contains("workspace")) {
        const auto& w = e.at("workspace");
        for (int i = 0; i < 3; ++i) {
          out.env.random_task.bounds_min[i] = w.at("min").at(i).get<double>();
          out.env.random_task.bounds_max[i] = w.at("max").at(i).get<double>();
        }
      }
      out.env.random_task.max_obstacles =
          e.value("max_obstacles", out.env.random_task.max_obstacles);
      out.env.random_task.moving_fraction =
          e.value("moving_fraction", out.env.random_task.moving_fraction);
    }
    out.env.step_max = out.train.max_episode_steps;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return out;
}

}  // namespace armplan
