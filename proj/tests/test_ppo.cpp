#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "armplan/ppo.hpp"
#include "armplan/robot_config.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace armplan;

namespace {

NetworkSpec small_spec() {
  NetworkSpec s;
  s.shared_layers = {32, 32};
  s.actor_head = {16};
  s.critic_head = {16};
  return s;
}

TrainConfig smoke_config() {
  TrainConfig cfg;
  cfg.net = small_spec();
  cfg.workers = 2;
  cfg.horizon = 512;
  cfg.minibatch = 256;
  cfg.epochs = 10;
  return cfg;
}

ArmEnv make_empty_env(const RobotDescription& robot) {
  EnvConfig env_cfg;
  env_cfg.random_task.max_obstacles = 0;
  return ArmEnv(robot, env_cfg);
}

}  // namespace

TEST_CASE("compute_gae") {
  SUBCASE("single terminal step reduces to r - V") {
    VecX<float> rewards(1), values(1), adv, ret;
    rewards << 2.0f;
    values << 0.5f;
    compute_gae(rewards, values, {1}, 99.0f, 0.99, 0.95, adv, ret);
    CHECK(adv[0] == doctest::Approx(1.5f));
    CHECK(ret[0] == doctest::Approx(2.0f));
  }
  SUBCASE("lambda = 1 without termination equals discounted rewards-to-go plus bootstrap") {
    Rng rng(61);
    const int T = 40;
    VecX<float> rewards(T), values(T), adv, ret;
    std::vector<double> rew_d(T), val_d(T);
    for (int t = 0; t < T; ++t) {
      rew_d[t] = rng.uniform(-1.0, 1.0);
      val_d[t] = rng.uniform(-1.0, 1.0);
      rewards[t] = static_cast<float>(rew_d[t]);
      values[t] = static_cast<float>(val_d[t]);
    }
    const double bootstrap = 0.37;
    compute_gae(rewards, values, std::vector<uint8_t>(T, 0), static_cast<float>(bootstrap), 0.99,
                1.0, adv, ret);
    const auto expected = oracle::mc_advantages(rew_d, val_d, bootstrap, 0.99);
    for (int t = 0; t < T; ++t)
      CHECK(adv[t] == doctest::Approx(expected[static_cast<size_t>(t)]).epsilon(1e-4));
  }
  SUBCASE("zero rewards and zero values give zero advantages") {
    const int T = 16;
    VecX<float> rewards = VecX<float>::Zero(T), values = VecX<float>::Zero(T), adv, ret;
    compute_gae(rewards, values, std::vector<uint8_t>(T, 0), 0.0f, 0.99, 0.95, adv, ret);
    CHECK(adv.cwiseAbs().maxCoeff() == 0.0f);
    CHECK(ret.cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("lambda = 0 yields one-step TD errors") {
    Rng rng(62);
    const int T = 20;
    VecX<float> rewards(T), values(T), adv, ret;
    for (int t = 0; t < T; ++t) {
      rewards[t] = static_cast<float>(rng.uniform(-1, 1));
      values[t] = static_cast<float>(rng.uniform(-1, 1));
    }
    std::vector<uint8_t> dones(T, 0);
    dones[7] = 1;
    const float bootstrap = 0.25f;
    compute_gae(rewards, values, dones, bootstrap, 0.99, 0.0, adv, ret);
    for (int t = 0; t < T; ++t) {
      const float nv = t == T - 1 ? bootstrap : values[t + 1];
      const float nonterm = dones[t] ? 0.0f : 1.0f;
      CHECK(adv[t] == doctest::Approx(rewards[t] + 0.99f * nv * nonterm - values[t]));
    }
  }
  SUBCASE("length mismatch throws") {
    VecX<float> r(3), v(2), adv, ret;
    CHECK_THROWS_AS(compute_gae(r, v, {0, 0, 0}, 0.0f, 0.99, 0.95, adv, ret),
                    std::invalid_argument);
  }
}

TEST_CASE("clipped surrogate matches the direct formula on controlled ratios") {
  const PolicyNet<double> net = PolicyNet<double>::init(small_spec(), 63);
  Rng rng(64);
  for (int trial = 0; trial < 200; ++trial) {
    const double ratio = rng.uniform(0.2, 2.5);
    const double advantage = rng.normal();
    const double eps = 0.2;

    Minibatch<double> mb;
    mb.obs = MatX<double>::Zero(net.spec.input_dim, 1);
    for (int i = 0; i < net.spec.input_dim; ++i) mb.obs(i, 0) = rng.normal();
    MatX<double> means;
    VecX<double> values;
    net.forward(mb.obs, means, values);
    mb.actions = means;  // sample at the mode
    mb.actions(0, 0) += 0.001;
    const double logp = net.log_prob(means.col(0), mb.actions.col(0));
    mb.old_logp.resize(1);
    mb.old_logp[0] = logp - std::log(ratio);  // forces the wanted ratio
    mb.advantages.resize(1);
    mb.advantages[0] = advantage;
    mb.returns = values;  // value loss contributes zero

    const LossSpec<double> loss{eps, 0.5, 0.0};
    const double surrogate = -net.loss_value(mb, loss);
    const double direct =
        std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
    CHECK(surrogate == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("ratio-one identity at unchanged parameters") {
  const PolicyNet<double> net = PolicyNet<double>::init(small_spec(), 65);
  Rng rng(66);
  const int B = 64;
  Minibatch<double> mb;
  mb.obs.resize(net.spec.input_dim, B);
  for (Eigen::Index i = 0; i < mb.obs.size(); ++i) mb.obs.data()[i] = rng.normal();
  MatX<double> means;
  VecX<double> values;
  net.forward(mb.obs, means, values);
  mb.actions.resize(6, B);
  mb.old_logp.resize(B);
  mb.advantages.resize(B);
  for (int k = 0; k < B; ++k) {
    VecX<double> a;
    double logp;
    net.sample_action(means.col(k), rng, a, logp);
    mb.actions.col(k) = a;
    mb.old_logp[k] = logp;  // identical parameters -> ratio exactly 1
    mb.advantages[k] = rng.normal();
  }
  mb.returns = values;

  LossMetrics<double> metrics;
  net.backward(mb, LossSpec<double>{0.2, 0.5, 0.0}, &metrics);
  CHECK(metrics.clip_fraction == 0.0);
  CHECK(metrics.policy_loss == doctest::Approx(-mb.advantages.mean()).epsilon(1e-12));
  CHECK(metrics.value_loss == doctest::Approx(0.0));
  CHECK(metrics.approx_kl == doctest::Approx(0.0));
}

TEST_CASE("ppo_update") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  TrainConfig cfg = smoke_config();
  cfg.minibatch = 64;
  cfg.epochs = 1;
  cfg.horizon = 32;
  cfg.workers = 2;

  auto make_ctx = [&]() {
    return make_rollout_context([&]() { return make_empty_env(ur5); }, cfg, TaskSpec{});
  };

  SUBCASE("first minibatch at unchanged params has clip fraction 0") {
    PolicyNet<float> params = PolicyNet<float>::init(cfg.net, cfg.seed);
    auto ctx = make_ctx();
    RolloutSet r = collect_rollouts(ctx, params, cfg.horizon);
    compute_gae(r, cfg.gamma, cfg.gae_lambda);
    TrainConfig one = cfg;
    one.minibatch = static_cast<int>(r.size());  // a single batch per epoch
    Adam opt;
    opt.init(params);
    Rng shuffle(1);
    const UpdateMetrics m = ppo_update(r, params, one, opt, shuffle);
    CHECK(m.clip_fraction == 0.0);
  }
  SUBCASE("zero advantages leave log_std untouched, value path still updates") {
    PolicyNet<float> params = PolicyNet<float>::init(cfg.net, cfg.seed);
    const VecX<float> log_std_before = params.log_std;
    auto ctx = make_ctx();
    RolloutSet r = collect_rollouts(ctx, params, cfg.horizon);
    compute_gae(r, cfg.gamma, cfg.gae_lambda);
    r.advantages.setZero();
    const VecX<float> critic_before =
        Eigen::Map<const VecX<float>>(params.critic.back().W.data(), params.critic.back().W.size());
    Adam opt;
    opt.init(params);
    Rng shuffle(1);
    TrainConfig zero_adv = cfg;
    zero_adv.minibatch = 64;
    ppo_update(r, params, zero_adv, opt, shuffle);
    CHECK(params.log_std == log_std_before);
    const VecX<float> critic_after =
        Eigen::Map<const VecX<float>>(params.critic.back().W.data(), params.critic.back().W.size());
    CHECK((critic_after - critic_before).cwiseAbs().maxCoeff() > 0.0f);
  }
  SUBCASE("exact value targets give zero value loss") {
    PolicyNet<float> params = PolicyNet<float>::init(cfg.net, cfg.seed);
    auto ctx = make_ctx();
    RolloutSet r = collect_rollouts(ctx, params, cfg.horizon);
    compute_gae(r, cfg.gamma, cfg.gae_lambda);
    r.returns = r.values;  // V == targets
    r.advantages.setZero();
    TrainConfig one = cfg;
    one.minibatch = static_cast<int>(r.size());
    Adam opt;
    opt.init(params);
    Rng shuffle(1);
    const UpdateMetrics m = ppo_update(r, params, one, opt, shuffle);
    CHECK(m.value_loss == doctest::Approx(0.0));
  }
}

TEST_CASE("collect_rollouts") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));
  TrainConfig cfg = smoke_config();

  SUBCASE("N=1, T=1 collects exactly one transition") {
    cfg.workers = 1;
    auto ctx = make_rollout_context([&]() { return make_empty_env(ur5); }, cfg, TaskSpec{});
    PolicyNet<float> params = PolicyNet<float>::init(cfg.net, 1);
    const RolloutSet r = collect_rollouts(ctx, params, 1);
    CHECK(r.size() == 1);
    CHECK(r.obs.cols() == 1);
  }
  SUBCASE("fixed seeds give bit-identical rollouts") {
    auto run = [&]() {
      auto ctx = make_rollout_context([&]() { return make_empty_env(ur5); }, cfg, TaskSpec{});
      PolicyNet<float> params = PolicyNet<float>::init(cfg.net, cfg.seed);
      return collect_rollouts(ctx, params, 64);
    };
    const RolloutSet a = run();
    const RolloutSet b = run();
    CHECK(a.obs == b.obs);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
    CHECK(a.log_probs == b.log_probs);
    CHECK(a.dones == b.dones);
  }
  SUBCASE("zero policy in an empty scene pays the pure distance penalty") {
    cfg.workers = 1;
    auto ctx = make_rollout_context([&]() { return make_empty_env(ur5); }, cfg, TaskSpec{});
    PolicyNet<float> params = PolicyNet<float>::zeros(cfg.net);
    params.log_std.setConstant(-40.0f);  // actions collapse to the zero mean
    const RolloutSet r = collect_rollouts(ctx, params, 32);
    const double d0 = static_cast<double>(-r.rewards[0]) / 0.01;
    for (int t = 0; t < 32; ++t) {
      CHECK(r.dones[static_cast<size_t>(t)] == 0);
      CHECK(r.rewards[t] == doctest::Approx(-0.01 * d0).epsilon(1e-4));
    }
  }
}

TEST_CASE("train") {
  const auto ur5 = load_robot_config(test_config("robots/ur5.json"));

  SUBCASE("zero step budget returns the initial parameters") {
    TrainConfig cfg = smoke_config();
    cfg.total_env_steps = 0;
    const TrainResult res =
        train(cfg, [&]() { return make_empty_env(ur5); }, TaskSpec{});
    const PolicyNet<float> fresh = PolicyNet<float>::init(cfg.net, cfg.seed);
    auto a = res.params.param_blocks();
    auto b = fresh.param_blocks();
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(Eigen::Map<const VecX<float>>(a[i].data, a[i].size) ==
            Eigen::Map<const VecX<float>>(b[i].data, b[i].size));
    CHECK(res.curve.empty());
  }

  SUBCASE("learning curve rows are per iteration with a monotone step counter") {
    TrainConfig cfg = smoke_config();
    cfg.horizon = 128;
    cfg.workers = 2;
    cfg.total_env_steps = 4 * 128 * 2;
    const std::string csv = "test_curve.csv";
    const TrainResult res = train(cfg, [&]() { return make_empty_env(ur5); }, TaskSpec{}, csv);
    CHECK(res.curve.size() == 4);
    for (size_t i = 0; i < res.curve.size(); ++i) {
      CHECK(res.curve[i].iteration == static_cast<int>(i) + 1);
      if (i > 0) CHECK(res.curve[i].env_steps > res.curve[i - 1].env_steps);
    }
    std::ifstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 5);  // header + 4 iterations
    std::remove(csv.c_str());
  }

  SUBCASE("deterministic: same config gives bit-identical parameters") {
    TrainConfig cfg = smoke_config();
    cfg.horizon = 128;
    cfg.workers = 2;
    cfg.total_env_steps = 2 * 128 * 2;
    const TrainResult r1 = train(cfg, [&]() { return make_empty_env(ur5); }, TaskSpec{});
    const TrainResult r2 = train(cfg, [&]() { return make_empty_env(ur5); }, TaskSpec{});
    auto a = r1.params.param_blocks();
    auto b = r2.params.param_blocks();
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(Eigen::Map<const VecX<float>>(a[i].data, a[i].size) ==
            Eigen::Map<const VecX<float>>(b[i].data, b[i].size));
  }

  SUBCASE("50k-step smoke improves the mean episode reward in 2 of 3 seeds") {
    int improved = 0;
    for (const uint64_t seed : {11ull, 12ull, 13ull}) {
      TrainConfig cfg = smoke_config();
      cfg.seed = seed;
      cfg.horizon = 1024;
      cfg.workers = 2;
      cfg.total_env_steps = 50000;
      const TrainResult res = train(cfg, [&]() { return make_empty_env(ur5); }, TaskSpec{});
      REQUIRE(res.curve.size() >= 2);
      if (res.curve.back().mean_reward > res.curve.front().mean_reward) ++improved;
    }
    CHECK(improved >= 2);
  }
}
