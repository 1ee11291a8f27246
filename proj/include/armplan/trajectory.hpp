#pragma once

#include <optional>
#include <string>
#include <vector>

#include "armplan/env.hpp"
#include "armplan/pose.hpp"

namespace armplan {

// Time-stamped execution trace shared by DRL episodes and executed planner
// paths; the JSON-lines dump feeds export-traj and external plotting.
struct TrajectoryPoint {
  double t = 0.0;  // s
  Eigen::VectorXd q;
  Pose ee;
  std::optional<Eigen::Matrix<double, 6, 1>> action;
  std::optional<RewardBreakdown> reward;
  bool collision = false;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::string outcome = "running";

  double ee_path_length() const;
};

void write_trajectory_jsonl(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_jsonl(const std::string& path);

// Flattens a JSON-lines trajectory into a per-step CSV.
void export_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace armplan
