#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "armplan/bench.hpp"
#include "armplan/env.hpp"
#include "armplan/ppo.hpp"
#include "armplan/robot_config.hpp"
#include "armplan/trajectory.hpp"

using namespace armplan;

namespace {

int cmd_train(const std::string& config_path, uint64_t seed_override, bool has_seed,
              const std::string& out_checkpoint, const std::string& curve_csv) {
  TrainFileConfig cfg = load_train_file(config_path);
  if (has_seed) cfg.train.seed = seed_override;

  const RobotDescription robot = load_robot_config(cfg.robot_config);
  TaskSpec task;
  if (!cfg.scenario.empty()) task.scenario = load_scenario(cfg.scenario);

  auto factory = [&]() { return ArmEnv(robot, cfg.env); };
  std::cout << "training: robot=" << robot.model.name << " seed=" << cfg.train.seed
            << " budget=" << cfg.train.total_env_steps << " steps\n";
  const TrainResult result = train(cfg.train, factory, task, curve_csv);
  std::cout << "finished: env_steps=" << result.env_steps << " episodes=" << result.episodes
            << " success_rate=" << result.final_success_rate
            << (result.stopped_early ? " (early stop)" : "") << "\n";
  save_checkpoint(result.params, out_checkpoint);
  std::cout << "checkpoint written to " << out_checkpoint << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& suite_path, int experiment_id,
             int trials) {
  SuiteConfig suite = load_suite(suite_path);
  for (auto& def : suite.experiments) {
    if (def.id != experiment_id) continue;
    def.checkpoint = checkpoint;
    def.trials = trials;
    def.planners = {kPlannerDRL};
    const LoadedExperiment exp = load_experiment(def, true);
    int successes = 0;
    double mean_len = 0.0, mean_time = 0.0;
    for (int t = 0; t < trials; ++t) {
      const TrialRecord rec =
          run_trial(exp, kPlannerDRL, suite.base_seed + t, suite.planner, suite.env);
      successes += rec.success ? 1 : 0;
      mean_len += rec.path_length_m;
      mean_time += rec.planner_compute_s + rec.sim_exec_s;
      std::cout << "trial " << t << ": " << (rec.success ? "success" : "failure")
                << " length=" << rec.path_length_m << " m, time="
                << rec.planner_compute_s + rec.sim_exec_s << " s\n";
    }
    std::cout << "success " << successes << "/" << trials
              << ", mean length=" << mean_len / trials << " m, mean time=" << mean_time / trials
              << " s\n";
    return successes == trials ? 0 : 2;
  }
  std::cerr << "experiment " << experiment_id << " not found in " << suite_path << "\n";
  return 1;
}

int cmd_plan(const std::string& planner, const std::string& suite_path, int experiment_id,
             uint64_t seed, const std::string& out_path) {
  const SuiteConfig suite = load_suite(suite_path);
  for (const auto& def : suite.experiments) {
    if (def.id != experiment_id) continue;
    const std::string canonical = planner == "rrt"     ? kPlannerRRT
                                  : planner == "birrt" ? kPlannerBiRRT
                                                       : planner;
    const LoadedExperiment exp = load_experiment(def, canonical == kPlannerDRL);
    Trajectory traj;
    const TrialRecord rec = run_trial(exp, canonical, seed, suite.planner, suite.env, &traj);
    write_trajectory_jsonl(traj, out_path);
    std::cout << (rec.success ? "success" : "failure") << ": " << traj.points.size()
              << " points, length=" << rec.path_length_m
              << " m, compute=" << rec.planner_compute_s << " s; trajectory written to "
              << out_path << "\n";
    return rec.success ? 0 : 2;
  }
  std::cerr << "experiment " << experiment_id << " not found in " << suite_path << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manipulator motion-planning workbench: DRL planner, sampling baselines and the "
               "benchmark harness"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a policy from a training config");
  std::string train_config, train_out = "checkpoint.bin", train_curve = "learning_curve.csv";
  uint64_t train_seed = 0;
  bool train_seed_set = false;
  train_cmd->add_option("--config", train_config, "training config JSON")->required();
  auto* seed_opt = train_cmd->add_option("--seed", train_seed, "seed override");
  train_cmd->add_option("--out", train_out, "output checkpoint path");
  train_cmd->add_option("--curve", train_curve, "learning-curve CSV path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Roll a checkpoint through an experiment");
  std::string eval_checkpoint, eval_suite;
  int eval_experiment = 1, eval_trials = 30;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "policy checkpoint")->required();
  eval_cmd->add_option("--suite", eval_suite, "suite config JSON")->required();
  eval_cmd->add_option("--experiment", eval_experiment, "experiment id");
  eval_cmd->add_option("--trials", eval_trials, "number of trials");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Run one planner trial and dump the trajectory");
  std::string plan_planner = "rrt", plan_suite, plan_out = "trajectory.jsonl";
  int plan_experiment = 1;
  uint64_t plan_seed = 7;
  plan_cmd->add_option("--planner", plan_planner, "rrt | birrt | DRL");
  plan_cmd->add_option("--suite", plan_suite, "suite config JSON")->required();
  plan_cmd->add_option("--experiment", plan_experiment, "experiment id");
  plan_cmd->add_option("--seed", plan_seed, "trial seed");
  plan_cmd->add_option("--out", plan_out, "trajectory output path");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run the full benchmark suite");
  std::string bench_config, bench_out = "report";
  bench_cmd->add_option("--config", bench_config, "suite config JSON")->required();
  bench_cmd->add_option("--out", bench_out, "report output directory");

  // export-traj
  auto* export_cmd = app.add_subcommand("export-traj", "Convert a trajectory dump to CSV");
  std::string export_in, export_out = "trajectory.csv";
  export_cmd->add_option("--in", export_in, "trajectory JSON-lines file")->required();
  export_cmd->add_option("--out", export_out, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      train_seed_set = seed_opt->count() > 0;
      return cmd_train(train_config, train_seed, train_seed_set, train_out, train_curve);
    }
    if (*eval_cmd) return cmd_eval(eval_checkpoint, eval_suite, eval_experiment, eval_trials);
    if (*plan_cmd) return cmd_plan(plan_planner, plan_suite, plan_experiment, plan_seed, plan_out);
    if (*bench_cmd) {
      const SuiteConfig cfg = load_suite(bench_config);
      run_suite(cfg, bench_out);
      std::cout << "report written to " << bench_out << "/ (trials.csv, report.json, report.txt)\n";
      return 0;
    }
    if (*export_cmd) {
      export_trajectory_csv(read_trajectory_jsonl(export_in), export_out);
      std::cout << "csv written to " << export_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
