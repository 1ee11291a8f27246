#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "armplan/baselines.hpp"
#include "armplan/env.hpp"
#include "armplan/policy.hpp"
#include "armplan/ppo.hpp"
#include "armplan/trajectory.hpp"

namespace armplan {

inline constexpr const char* kPlannerDRL = "DRL";
inline constexpr const char* kPlannerRRT = "RRT";
inline constexpr const char* kPlannerBiRRT = "NC-RRT-proxy";

struct ExperimentDef {
  int id = 0;
  std::string robot;         // label: ur5 | kr16
  std::string robot_config;  // path
  std::string scene_file;    // path
  int trials = 30;
  std::vector<std::string> planners;
  std::string checkpoint;  // required for DRL trials
};

struct TrialRecord {
  int experiment = 0;
  std::string planner;
  uint64_t seed = 0;
  bool success = false;
  bool collision = false;
  double path_length_m = 0.0;
  double planner_compute_s = 0.0;
  double sim_exec_s = 0.0;
  int steps = 0;
};

struct SuiteConfig {
  std::vector<ExperimentDef> experiments;
  PlannerParams planner;
  EnvConfig env;
  uint64_t base_seed = 1000;
  int workers = 4;
  std::string reference_csv;  // bundled published values for the delta block
};

SuiteConfig load_suite(const std::string& path);

// Ready-to-run experiment: parsed scenario + robot + optional policy.
struct LoadedExperiment {
  ExperimentDef def;
  ScenarioFile scenario;
  RobotDescription robot;
  std::optional<PolicyNet<float>> policy;
};

LoadedExperiment load_experiment(const ExperimentDef& def, bool need_policy);

TrialRecord run_trial(const LoadedExperiment& exp, const std::string& planner, uint64_t seed,
                      const PlannerParams& planner_params, const EnvConfig& env_cfg,
                      Trajectory* trajectory_out = nullptr);

double path_length(const Trajectory& trajectory);

struct ReportCell {
  int experiment = 0;
  std::string planner;
  int trials = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double mean_exec_time_s = 0.0;  // planner compute + simulated execution, successful trials
  double std_exec_time_s = 0.0;
  double mean_path_length_m = 0.0;
  double std_path_length_m = 0.0;
  std::optional<double> ref_exec_time_s;  // published values when available
  std::optional<double> ref_path_length_m;
};

struct SuiteReport {
  std::vector<TrialRecord> trials;
  std::vector<ReportCell> cells;
};

// Runs trials on a worker pool, writes trials.csv + report.json (+ a plain
// text table) into out_dir; deterministic for a fixed base seed.
SuiteReport run_suite(const SuiteConfig& config, const std::string& out_dir);

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path);
std::vector<TrialRecord> read_trials_csv(const std::string& path);

}  // namespace armplan
