#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "armplan/geometry.hpp"
#include "armplan/kinematics.hpp"
#include "armplan/pose.hpp"

namespace armplan {

enum class ObstacleKind { Box, Plate, Compound };

// Piecewise-linear position track; positions are absolute world coordinates.
struct MotionTrack {
  struct Waypoint {
    double time = 0.0;  // s, strictly increasing
    Vec3 position = Vec3::Zero();
  };
  std::vector<Waypoint> waypoints;
  bool loop = false;

  Vec3 sample(double t) const;
  void validate() const;
};

struct ObstaclePrimitive {
  std::string name;
  ObstacleKind kind = ObstacleKind::Box;
  Pose pose;  // parent frame (world for top-level obstacles)
  Vec3 half_extents = Vec3::Ones();
  std::vector<ObstaclePrimitive> children;  // compound members, posed relative to parent
  std::optional<MotionTrack> track;

  void validate() const;
};

struct RayHit {
  double fraction = 1.0;  // t_hit / max_range; 1.0 when nothing is hit
  bool hit = false;
  Vec3 point = Vec3::Zero();  // valid iff hit
};

struct CollisionPair {
  std::string first;
  std::string second;
};

struct CollisionReport {
  bool world_hit = false;
  bool self_hit = false;
  std::vector<CollisionPair> pairs;
  bool any() const { return world_hit || self_hit; }
};

// Immutable snapshot of the world at sim_time; advance() returns a new one.
struct Scene {
  std::vector<ObstaclePrimitive> obstacles;
  Vec3 bounds_min = Vec3(-1.0, -1.0, -1.0);
  Vec3 bounds_max = Vec3(1.0, 1.0, 1.0);
  double sim_time = 0.0;

  void validate() const;

  // Visits every leaf box with its world pose (track-updated for sim_time).
  void for_each_box(const std::function<void(const std::string&, const Box&)>& fn) const;
};

Scene load_scene(const std::string& path);
Scene scene_from_json_text(const std::string& text, const std::string& origin = "<string>");

// Full scenario file: the scene plus the robot start configuration and the
// ordered goal list used by experiments.
struct ScenarioFile {
  std::string name;
  Scene scene;
  Eigen::VectorXd start;    // joint configuration; empty = robot home
  std::vector<Vec3> goals;  // executed in order
};

ScenarioFile load_scenario(const std::string& path);
ScenarioFile scenario_from_json_text(const std::string& text,
                                     const std::string& origin = "<string>");

Scene advance(const Scene& scene, double dt);

RayHit ray_cast(const Scene& scene, const Vec3& origin, const Vec3& direction, double max_range);

bool in_workspace(const Scene& scene, const Vec3& p);

CollisionReport check_robot_collision(const Scene& scene, const RobotModel& model,
                                      const Eigen::VectorXd& q);

}  // namespace armplan
