#include "armplan/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "armplan/errors.hpp"
#include "armplan/robot_config.hpp"

namespace armplan {

using nlohmann::json;

SuiteConfig load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("suite config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }

  SuiteConfig cfg;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).string();
  };
  try {
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.reference_csv = resolve(j.value("reference_csv", ""));
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      cfg.planner.step_size = p.value("step_size", cfg.planner.step_size);
      cfg.planner.goal_bias = p.value("goal_bias", cfg.planner.goal_bias);
      cfg.planner.max_iterations = p.value("max_iterations", cfg.planner.max_iterations);
      cfg.planner.connect_threshold = p.value("connect_threshold", cfg.planner.connect_threshold);
      cfg.planner.collision_check_resolution =
          p.value("collision_check_resolution", cfg.planner.collision_check_resolution);
    }
    if (j.contains("env")) {
      cfg.env.dt = j.at("env").value("dt", cfg.env.dt);
      cfg.env.step_max = j.at("env").value("step_max", cfg.env.step_max);
    }
    for (const auto& e : j.at("experiments")) {
      ExperimentDef def;
      def.id = e.at("id").get<int>();
      def.robot = e.value("robot", "");
      def.robot_config = resolve(e.at("robot_config").get<std::string>());
      def.scene_file = resolve(e.at("scene").get<std::string>());
      def.trials = e.value("trials", 30);
      def.planners = e.value("planners",
                             std::vector<std::string>{kPlannerDRL, kPlannerRRT, kPlannerBiRRT});
      def.checkpoint = resolve(e.value("checkpoint", ""));
      cfg.experiments.push_back(std::move(def));
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return cfg;
}

LoadedExperiment load_experiment(const ExperimentDef& def, bool need_policy) {
  LoadedExperiment exp;
  exp.def = def;
  exp.scenario = load_scenario(def.scene_file);
  exp.robot = load_robot_config(def.robot_config);
  if (need_policy) {
    if (def.checkpoint.empty())
      throw ParseError("experiment " + std::to_string(def.id) +
                       ": DRL planner requires a checkpoint");
    exp.policy = load_checkpoint<float>(def.checkpoint);
  }
  return exp;
}

double path_length(const Trajectory& trajectory) { return trajectory.ee_path_length(); }

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

TrialRecord run_drl_trial(const LoadedExperiment& exp, uint64_t seed, const EnvConfig& env_cfg,
                          Trajectory* trajectory_out) {
  TrialRecord rec;
  rec.planner = kPlannerDRL;
  const PolicyNet<float>& policy = *exp.policy;

  ArmEnv env(exp.robot, env_cfg);
  CurriculumState curriculum = CurriculumState::make(CurriculumParams{});
  Observation obs = env.reset(seed, curriculum, exp.scenario, /*eval=*/true, /*goal_index=*/0);

  MatX<float> obs_mat(policy.spec.input_dim, 1);
  MatX<float> means;
  VecX<float> values;
  int goal_index = 0;
  bool all_goals = false;
  double compute_s = 0.0;
  int total_steps = 0;

  Trajectory traj;
  auto record_point = [&](const StepResult* sr) {
    TrajectoryPoint p;
    p.t = total_steps * env_cfg.dt;
    p.q = env.state().q;
    p.ee = env.ee_pose();
    if (sr) {
      p.reward = sr->reward;
      p.collision = env.state().outcome == Outcome::Collision;
    }
    traj.points.push_back(std::move(p));
  };
  record_point(nullptr);

  while (true) {
    obs_mat.col(0) = obs.to_vector().cast<float>();
    const double t0 = now_seconds();
    policy.forward(obs_mat, means, values);
    compute_s += now_seconds() - t0;

    const Action action = Action::from_vector(means.col(0).cast<double>());
    const StepResult sr = env.step(action);
    ++total_steps;
    obs = sr.obs;
    record_point(&sr);
    if (traj.points.size() >= 2) {
      const auto& pts = traj.points;
      rec.path_length_m += (pts[pts.size() - 1].ee.position - pts[pts.size() - 2].ee.position).norm();
    }

    if (sr.done) {
      const Outcome outcome = env.state().outcome;
      if (outcome == Outcome::Success &&
          goal_index + 1 < static_cast<int>(exp.scenario.goals.size()) &&
          total_steps < env_cfg.step_max) {
        ++goal_index;
        // Next goal continues from the current configuration and scene time.
        obs = env.reset(seed, curriculum, exp.scenario, /*eval=*/true, goal_index,
                        env.state().q);
        continue;
      }
      all_goals = outcome == Outcome::Success;
      rec.collision = outcome == Outcome::Collision;
      traj.outcome = outcome_name(outcome);
      break;
    }
    if (total_steps >= env_cfg.step_max) {
      traj.outcome = outcome_name(Outcome::Timeout);
      break;
    }
  }

  rec.success = all_goals;
  rec.planner_compute_s = compute_s;
  rec.steps = total_steps;
  rec.sim_exec_s = total_steps * env_cfg.dt;
  if (trajectory_out) *trajectory_out = std::move(traj);
  return rec;
}

TrialRecord run_sampling_trial(const LoadedExperiment& exp, const std::string& planner,
                               uint64_t seed, const PlannerParams& planner_params,
                               const EnvConfig& env_cfg, Trajectory* trajectory_out) {
  TrialRecord rec;
  rec.planner = planner;

  const RobotModel& model = exp.robot.model;
  Scene scene = exp.scenario.scene;
  scene.sim_time = 0.0;

  Rng rng(seed);
  Eigen::VectorXd q_start = exp.scenario.start.size() > 0 ? exp.scenario.start : model.home;

  // Plan every goal segment against the t=0 world, then execute the chained
  // path while the scene moves.
  JointPath full_path;
  double compute_s = 0.0;
  bool planned = true;
  Eigen::VectorXd q_from = q_start;
  constexpr int kPlanRounds = 3;  // fresh goal configuration per round
  for (const Vec3& goal : exp.scenario.goals) {
    bool segment_done = false;
    for (int round = 0; round < kPlanRounds && !segment_done; ++round) {
      const double t0 = now_seconds();
      const auto q_goal = goal_config(model, scene, goal, rng, 100, 1e-4,
                                      round == 0 ? &q_from : nullptr);
      if (!q_goal) {
        compute_s += now_seconds() - t0;
        continue;
      }
      PlannerParams params = planner_params;
      params.seed = rng.next_u64();
      const PlanResult plan = planner == kPlannerRRT
                                  ? rrt_plan(model, scene, q_from, *q_goal, params)
                                  : birrt_plan(model, scene, q_from, *q_goal, params);
      compute_s += now_seconds() - t0;
      if (!plan.success) continue;
      const size_t skip = full_path.empty() ? 0 : 1;  // shared junction config
      full_path.insert(full_path.end(), plan.path.begin() + skip, plan.path.end());
      q_from = *q_goal;
      segment_done = true;
    }
    if (!segment_done) {
      planned = false;
      break;
    }
  }
  rec.planner_compute_s = compute_s;

  if (!planned) {
    if (trajectory_out) trajectory_out->outcome = "planning_failure";
    return rec;  // success = false, collision = false
  }

  ExecutionResult exec = execute_path(model, scene, full_path, env_cfg.dt);
  rec.steps = exec.steps;
  rec.sim_exec_s = exec.sim_exec_seconds;
  rec.path_length_m = exec.ee_path_length;
  rec.collision = exec.status == ExecutionResult::Status::RuntimeCollision;
  rec.success = exec.status == ExecutionResult::Status::Ok;
  if (trajectory_out) *trajectory_out = std::move(exec.trajectory);
  return rec;
}

}  // namespace

TrialRecord run_trial(const LoadedExperiment& exp, const std::string& planner, uint64_t seed,
                      const PlannerParams& planner_params, const EnvConfig& env_cfg,
                      Trajectory* trajectory_out) {
  TrialRecord rec;
  try {
    if (planner == kPlannerDRL)
      rec = run_drl_trial(exp, seed, env_cfg, trajectory_out);
    else
      rec = run_sampling_trial(exp, planner, seed, planner_params, env_cfg, trajectory_out);
  } catch (const std::exception&) {
    // Planner failures become failed records; the suite never aborts.
    rec.planner = planner;
    rec.success = false;
  }
  rec.experiment = exp.def.id;
  rec.seed = seed;
  return rec;
}

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("bench: cannot open " + path + " for writing");
  out << "experiment,planner,seed,success,collision,path_length_m,planner_compute_s,sim_exec_s,"
         "steps\n";
  out.precision(17);
  for (const auto& t : trials)
    out << t.experiment << ',' << t.planner << ',' << t.seed << ',' << (t.success ? 1 : 0) << ','
        << (t.collision ? 1 : 0) << ',' << t.path_length_m << ',' << t.planner_compute_s << ','
        << t.sim_exec_s << ',' << t.steps << '\n';
}

std::vector<TrialRecord> read_trials_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("bench: cannot open " + path);
  std::vector<TrialRecord> trials;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    TrialRecord t;
    std::getline(ss, field, ',');
    t.experiment = std::stoi(field);
    std::getline(ss, t.planner, ',');
    std::getline(ss, field, ',');
    t.seed = std::stoull(field);
    std::getline(ss, field, ',');
    t.success = field == "1";
    std::getline(ss, field, ',');
    t.collision = field == "1";
    std::getline(ss, field, ',');
    t.path_length_m = std::stod(field);
    std::getline(ss, field, ',');
    t.planner_compute_s = std::stod(field);
    std::getline(ss, field, ',');
    t.sim_exec_s = std::stod(field);
    std::getline(ss, field, ',');
    t.steps = std::stoi(field);
    trials.push_back(std::move(t));
  }
  return trials;
}

namespace {

struct RefEntry {
  double exec_time_s = 0.0;
  double path_length_m = 0.0;
};

std::map<std::pair<int, std::string>, RefEntry> load_reference(const std::string& path) {
  std::map<std::pair<int, std::string>, RefEntry> ref;
  if (path.empty()) return ref;
  std::ifstream in(path);
  if (!in) throw ParseError("bench: cannot open reference csv " + path);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string exp_s, planner, time_s, len_s;
    std::getline(ss, exp_s, ',');
    std::getline(ss, planner, ',');
    std::getline(ss, time_s, ',');
    std::getline(ss, len_s, ',');
    if (time_s.empty() || len_s.empty()) continue;  // planner had no result
    ref[{std::stoi(exp_s), planner}] = {std::stod(time_s), std::stod(len_s)};
  }
  return ref;
}

}  // namespace

SuiteReport run_suite(const SuiteConfig& config, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  struct Job {
    int exp_index;
    std::string planner;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  std::vector<LoadedExperiment> loaded;
  for (size_t e = 0; e < config.experiments.size(); ++e) {
    const auto& def = config.experiments[e];
    const bool need_policy =
        std::find(def.planners.begin(), def.planners.end(), kPlannerDRL) != def.planners.end();
    loaded.push_back(load_experiment(def, need_policy));
    for (const auto& planner : def.planners)
      for (int t = 0; t < def.trials; ++t)
        jobs.push_back({static_cast<int>(e), planner,
                        config.base_seed + static_cast<uint64_t>(def.id) * 10000 +
                            static_cast<uint64_t>(t)});
  }

  std::vector<TrialRecord> results(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      const Job& job = jobs[i];
      results[i] =
          run_trial(loaded[job.exp_index], job.planner, job.seed, config.planner, config.env);
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::max(1, config.workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  SuiteReport report;
  report.trials = results;

  const auto ref = load_reference(config.reference_csv);
  for (const auto& def : config.experiments) {
    for (const auto& planner : def.planners) {
      ReportCell cell;
      cell.experiment = def.id;
      cell.planner = planner;
      std::vector<double> times, lengths;
      for (const auto& t : results) {
        if (t.experiment != def.id || t.planner != planner) continue;
        ++cell.trials;
        cell.success_rate += t.success ? 1.0 : 0.0;
        cell.collision_rate += t.collision ? 1.0 : 0.0;
        if (t.success) {
          times.push_back(t.planner_compute_s + t.sim_exec_s);
          lengths.push_back(t.path_length_m);
        }
      }
      if (cell.trials > 0) {
        cell.success_rate /= cell.trials;
        cell.collision_rate /= cell.trials;
      }
      auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
        if (xs.empty()) {
          mean = 0.0;
          sd = 0.0;
          return;
        }
        mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        sd = 0.0;
        for (double x : xs) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(xs.size()));
      };
      mean_std(times, cell.mean_exec_time_s, cell.std_exec_time_s);
      mean_std(lengths, cell.mean_path_length_m, cell.std_path_length_m);
      if (const auto it = ref.find({def.id, planner}); it != ref.end()) {
        cell.ref_exec_time_s = it->second.exec_time_s;
        cell.ref_path_length_m = it->second.path_length_m;
      }
      report.cells.push_back(std::move(cell));
    }
  }

  write_trials_csv(results, (std::filesystem::path(out_dir) / "trials.csv").string());

  json out;
  out["base_seed"] = config.base_seed;
  json cells = json::array();
  for (const auto& c : report.cells) {
    json jc;
    jc["experiment"] = c.experiment;
    jc["planner"] = c.planner;
    jc["trials"] = c.trials;
    jc["success_rate"] = c.success_rate;
    jc["collision_rate"] = c.collision_rate;
    jc["mean_exec_time_s"] = c.mean_exec_time_s;
    jc["std_exec_time_s"] = c.std_exec_time_s;
    jc["mean_path_length_m"] = c.mean_path_length_m;
    jc["std_path_length_m"] = c.std_path_length_m;
    if (c.ref_exec_time_s) {
      jc["ref_exec_time_s"] = *c.ref_exec_time_s;
      jc["delta_exec_time_s"] = c.mean_exec_time_s - *c.ref_exec_time_s;
    }
    if (c.ref_path_length_m) {
      jc["ref_path_length_m"] = *c.ref_path_length_m;
      jc["delta_path_length_m"] = c.mean_path_length_m - *c.ref_path_length_m;
    }
    cells.push_back(std::move(jc));
  }
  out["cells"] = cells;
  std::ofstream jf((std::filesystem::path(out_dir) / "report.json").string());
  jf << out.dump(2) << '\n';

  std::ofstream tf((std::filesystem::path(out_dir) / "report.txt").string());
  tf << "exp planner          succ  coll  time[s]   (ref)    length[m] (ref)\n";
  char buf[256];
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof(buf), "%-3d %-15s %4.2f  %4.2f  %8.3f %8s  %8.3f %8s\n",
                  c.experiment, c.planner.c_str(), c.success_rate, c.collision_rate,
                  c.mean_exec_time_s,
                  c.ref_exec_time_s ? std::to_string(*c.ref_exec_time_s).substr(0, 5).c_str()
                                    : "-",
                  c.mean_path_length_m,
                  c.ref_path_length_m ? std::to_string(*c.ref_path_length_m).substr(0, 5).c_str()
                                      : "-");
    tf << buf;
  }
  return report;
}

}  // namespace armplan
