#include "armplan/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "armplan/errors.hpp"

namespace armplan {

using nlohmann::json;

void MotionTrack::validate() const {
  if (waypoints.size() < 2) throw InvariantViolation("motion track: needs >= 2 waypoints");
  for (size_t i = 1; i < waypoints.size(); ++i)
    if (!(waypoints[i].time > waypoints[i - 1].time))
      throw InvariantViolation("motion track: times not strictly increasing");
}

Vec3 MotionTrack::sample(double t) const {
  const double t0 = waypoints.front().time;
  const double t1 = waypoints.back().time;
  if (loop) {
    const double span = t1 - t0;
    t = t0 + std::fmod(t - t0, span);
    if (t < t0) t += span;
  } else {
    t = std::clamp(t, t0, t1);
  }
  for (size_t i = 1; i < waypoints.size(); ++i) {
    if (t <= waypoints[i].time) {
      const auto& a = waypoints[i - 1];
      const auto& b = waypoints[i];
      const double u = (t - a.time) / (b.time - a.time);
      return a.position + u * (b.position - a.position);
    }
  }
  return waypoints.back().position;
}

void ObstaclePrimitive::validate() const {
  if (kind != ObstacleKind::Compound) {
    if (!(half_extents.array() > 0.0).all())
      throw InvariantViolation("obstacle '" + name + "': half_extents must be > 0");
  }
  if (track) track->validate();
  for (const auto& c : children) c.validate();
}

void Scene::validate() const {
  for (int i = 0; i < 3; ++i)
    if (!(bounds_min[i] < bounds_max[i]))
      throw InvariantViolation("scene: workspace bounds min >= max on axis " + std::to_string(i));
  if (sim_time < 0.0) throw InvariantViolation("scene: sim_time < 0");
  for (const auto& o : obstacles) o.validate();
}

namespace {

void visit_boxes(const ObstaclePrimitive& o, const Eigen::Isometry3d& parent, double sim_time,
                 const std::function<void(const std::string&, const Box&)>& fn) {
  Eigen::Isometry3d pose = parent * o.pose.isometry();
  if (o.track) pose.translation() = o.track->sample(sim_time);
  if (o.kind == ObstacleKind::Compound) {
    for (const auto& c : o.children) visit_boxes(c, pose, sim_time, fn);
  } else {
    fn(o.name, Box{pose, o.half_extents});
  }
}

}  // namespace

void Scene::for_each_box(const std::function<void(const std::string&, const Box&)>& fn) const {
  for (const auto& o : obstacles)
    visit_boxes(o, Eigen::Isometry3d::Identity(), sim_time, fn);
}

Scene advance(const Scene& scene, double dt) {
  Scene next = scene;
  next.sim_time = scene.sim_time + dt;
  return next;  // tracked poses are resolved lazily from sim_time
}

RayHit ray_cast(const Scene& scene, const Vec3& origin, const Vec3& direction, double max_range) {
  RayHit best;
  best.fraction = 1.0;
  double best_t = max_range;
  bool any = false;
  scene.for_each_box([&](const std::string&, const Box& box) {
    const RayBoxHit h = ray_box_intersect(origin, direction, max_range, box);
    if (h.hit && h.t <= best_t) {
      best_t = h.t;
      any = true;
    }
  });
  if (any) {
    best.hit = true;
    best.fraction = best_t / max_range;
    best.point = origin + best_t * direction;
  }
  return best;
}

bool in_workspace(const Scene& scene, const Vec3& p) {
  return (p.array() >= scene.bounds_min.array()).all() &&
         (p.array() <= scene.bounds_max.array()).all();
}

CollisionReport check_robot_collision(const Scene& scene, const RobotModel& model,
                                      const Eigen::VectorXd& q) {
  CollisionReport report;

  // Capsule endpoints in world coordinates.
  const int n = model.dof();
  std::vector<Eigen::Isometry3d> frames(n + 1);
  Mat4 T = Mat4::Identity();
  frames[0] = Eigen::Isometry3d::Identity();
  for (int i = 0; i < n; ++i) {
    T = T * dh_transform(model.dh[i], q[i]);
    frames[i + 1].matrix() = T;
  }
  const Eigen::Isometry3d tool = frames[n] * model.ee_transform;

  const size_t m = model.capsules.size();
  std::vector<Vec3> a(m), b(m);
  for (size_t i = 0; i < m; ++i) {
    const auto& c = model.capsules[i];
    const Eigen::Isometry3d& f = c.frame == kToolFrame ? tool : frames[c.frame];
    a[i] = f * c.p0;
    b[i] = f * c.p1;
  }

  scene.for_each_box([&](const std::string& box_name, const Box& box) {
    for (size_t i = 0; i < m; ++i) {
      // Bounding-sphere reject before the exact segment query.
      const Vec3 mid = 0.5 * (a[i] + b[i]);
      const double reach = 0.5 * (b[i] - a[i]).norm() + model.capsules[i].radius;
      if (point_box_distance(mid, box) > reach) continue;
      if (capsule_intersects_box(a[i], b[i], model.capsules[i].radius, box)) {
        report.world_hit = true;
        report.pairs.push_back({model.capsules[i].name, box_name});
      }
    }
  });

  // Self collision, adjacent capsules excluded.
  for (size_t i = 0; i + 2 <= m; ++i) {
    for (size_t j = i + 2; j < m; ++j) {
      const double d = segment_segment_distance(a[i], b[i], a[j], b[j]);
      if (d <= model.capsules[i].radius + model.capsules[j].radius) {
        report.self_hit = true;
        report.pairs.push_back({model.capsules[i].name, model.capsules[j].name});
      }
    }
  }
  return report;
}

namespace {

Vec3 parse_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError("scene: field '" + field + "' must be a 3-array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Pose parse_pose(const json& j) {
  Pose p;
  if (j.contains("xyz")) p.position = parse_vec3(j.at("xyz"), "xyz");
  if (j.contains("rpy"))
    p.orientation = Eigen::Quaterniond(rpy_to_matrix(parse_vec3(j.at("rpy"), "rpy")));
  p.canonicalize();
  return p;
}

ObstaclePrimitive parse_obstacle(const json& j) {
  ObstaclePrimitive o;
  o.name = j.value("name", "obstacle");
  const std::string kind = j.value("kind", "box");
  if (kind == "box")
    o.kind = ObstacleKind::Box;
  else if (kind == "plate")
    o.kind = ObstacleKind::Plate;
  else if (kind == "compound")
    o.kind = ObstacleKind::Compound;
  else
    throw ParseError("scene: obstacle '" + o.name + "': unknown kind '" + kind + "'");
  if (j.contains("pose")) o.pose = parse_pose(j.at("pose"));
  if (o.kind != ObstacleKind::Compound)
    o.half_extents = parse_vec3(j.at("half_extents"), "half_extents");
  for (const auto& c : j.value("children", json::array())) o.children.push_back(parse_obstacle(c));
  if (j.contains("track")) {
    MotionTrack t;
    for (const auto& w : j.at("track").at("waypoints")) {
      MotionTrack::Waypoint wp;
      wp.time = w.at("t").get<double>();
      wp.position = parse_vec3(w.at("pos"), "track waypoint pos");
      t.waypoints.push_back(wp);
    }
    t.loop = j.at("track").value("loop", false);
    o.track = t;
  }
  return o;
}

}  // namespace

Scene scene_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  Scene s;
  try {
    if (j.contains("workspace_bounds")) {
      s.bounds_min = parse_vec3(j.at("workspace_bounds").at("min"), "workspace_bounds.min");
      s.bounds_max = parse_vec3(j.at("workspace_bounds").at("max"), "workspace_bounds.max");
    }
    for (const auto& o : j.value("obstacles", json::array())) s.obstacles.push_back(parse_obstacle(o));
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  s.validate();
  return s;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scene: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scene_from_json_text(buf.str(), path);
}

ScenarioFile scenario_from_json_text(const std::string& text, const std::string& origin) {
  ScenarioFile sc;
  sc.scene = scene_from_json_text(text, origin);
  json j = json::parse(text);
  sc.name = j.value("name", origin);
  if (j.contains("robot_start")) {
    const auto& arr = j.at("robot_start");
    sc.start.resize(static_cast<Eigen::Index>(arr.size()));
    for (size_t i = 0; i < arr.size(); ++i) sc.start[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  for (const auto& g : j.value("goals", json::array()))
    sc.goals.push_back(parse_vec3(g, "goals[]"));
  return sc;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scene: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str(), path);
}

}  // namespace armplan
