#include "armplan/robot_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "armplan/errors.hpp"

namespace armplan {

using nlohmann::json;

namespace {

Vec3 get_vec3(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

Eigen::VectorXd get_vector(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

int parse_frame(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "tool") return kToolFrame;
    throw ParseError("robot config: unknown frame '" + j.get<std::string>() + "'");
  }
  return j.get<int>();
}

Eigen::Isometry3d parse_local(const json& j) {
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  if (j.contains("xyz")) iso.translation() = get_vec3(j.at("xyz"));
  if (j.contains("rpy")) iso.linear() = rpy_to_matrix(get_vec3(j.at("rpy")));
  return iso;
}

std::vector<LocalRay> parse_ray_group(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "cone_ring") {
    return cone_ring(j.at("count").get<int>(), j.at("polar_deg").get<double>() * M_PI / 180.0,
                     j.value("azimuth_offset_deg", 0.0) * M_PI / 180.0, j.value("axis", 1.0));
  }
  if (type == "cylinder_band") {
    return cylinder_band(j.at("stations").get<int>(), j.at("per_station").get<int>(),
                         j.at("radius").get<double>(), j.at("z0").get<double>(),
                         j.at("z1").get<double>());
  }
  if (type == "axial") {
    LocalRay r;
    r.direction = Vec3::UnitZ();
    return {r};
  }
  if (type == "explicit") {
    std::vector<LocalRay> rays;
    for (const auto& e : j.at("rays")) {
      LocalRay r;
      if (e.contains("origin")) r.origin = get_vec3(e.at("origin"));
      r.direction = get_vec3(e.at("dir")).normalized();
      rays.push_back(r);
    }
    return rays;
  }
  throw ParseError("robot config: unknown ray group type '" + type + "'");
}

RayBundleSpec parse_bundle(const json& sensors, const std::string& mount) {
  RayBundleSpec spec;
  spec.mount = mount;
  spec.max_range = sensors.value("max_range", 0.4);
  for (const auto& group : sensors.at("bundles").at(mount)) {
    auto rays = parse_ray_group(group);
    spec.rays.insert(spec.rays.end(), rays.begin(), rays.end());
  }
  return spec;
}

}  // namespace

RobotDescription robot_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }

  RobotDescription desc;
  RobotModel& m = desc.model;
  try {
    m.name = j.value("name", origin);
    for (const auto& row : j.at("dh_rows")) {
      DHRow r;
      r.theta_offset = row.value("theta_offset", 0.0);
      r.d = row.value("d", 0.0);
      r.a = row.value("a", 0.0);
      r.alpha = row.value("alpha", 0.0);
      m.dh.push_back(r);
    }
    const int n = m.dof();
    m.joint_min.resize(n);
    m.joint_max.resize(n);
    const auto& limits = j.at("joint_limits");
    if (static_cast<int>(limits.size()) != n)
      throw ParseError(origin + ": joint_limits count != dh_rows count");
    for (int i = 0; i < n; ++i) {
      m.joint_min[i] = limits[i].at(0).get<double>();
      m.joint_max[i] = limits[i].at(1).get<double>();
    }
    if (j.contains("ee_transform")) {
      const auto& t = j.at("ee_transform");
      if (t.size() != 16) throw ParseError(origin + ": ee_transform must be 16 row-major reals");
      Mat4 T;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) T(r, c) = t[r * 4 + c].get<double>();
      m.ee_transform.matrix() = T;
    }
    m.home = j.contains("home") ? get_vector(j.at("home")) : Eigen::VectorXd::Zero(n);
    m.max_joint_speed = j.contains("max_joint_speed") ? get_vector(j.at("max_joint_speed"))
                                                      : Eigen::VectorXd::Constant(n, M_PI);
    for (const auto& c : j.value("link_capsules", json::array())) {
      Capsule cap;
      cap.name = c.value("name", "capsule");
      cap.frame = parse_frame(c.at("frame"));
      cap.p0 = get_vec3(c.at("p0"));
      cap.p1 = get_vec3(c.at("p1"));
      cap.radius = c.at("radius").get<double>();
      m.capsules.push_back(cap);
    }
    const json sensor_frames = j.value("sensor_frames", json::object());
    for (const auto& [name, mj] : sensor_frames.items()) {
      SensorMount mount;
      mount.name = name;
      mount.frame = parse_frame(mj.at("frame"));
      mount.local = parse_local(mj);
      m.mounts.push_back(mount);
    }
    if (j.contains("sensors")) {
      desc.bundles.wrist = parse_bundle(j.at("sensors"), "wrist");
      desc.bundles.ee_surface = parse_bundle(j.at("sensors"), "ee_surface");
      desc.bundles.ee_tip = parse_bundle(j.at("sensors"), "ee_tip");
    } else {
      desc.bundles = build_default_bundles();
    }
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  m.validate();
  return desc;
}

RobotDescription load_robot_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("robot config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return robot_from_json_text(buf.str(), path);
}

}  // namespace armplan
