#include "armplan/trajectory.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "armplan/errors.hpp"

namespace armplan {

using nlohmann::json;

double Trajectory::ee_path_length() const {
  double len = 0.0;
  for (size_t i = 1; i < points.size(); ++i)
    len += (points[i].ee.position - points[i - 1].ee.position).norm();
  return len;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

void write_trajectory_jsonl(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("trajectory: cannot open " + path + " for writing");
  json meta;
  meta["type"] = "meta";
  meta["outcome"] = traj.outcome;
  meta["points"] = traj.points.size();
  out << meta.dump() << '\n';
  for (const auto& p : traj.points) {
    json j;
    j["t"] = p.t;
    j["q"] = vec_to_json(p.q);
    j["ee"] = {{"xyz", {p.ee.position.x(), p.ee.position.y(), p.ee.position.z()}},
               {"quat",
                {p.ee.orientation.w(), p.ee.orientation.x(), p.ee.orientation.y(),
                 p.ee.orientation.z()}}};
    if (p.action) j["action"] = vec_to_json(*p.action);
    if (p.reward) {
      j["reward"] = {{"r_suc", p.reward->r_suc},     {"r_c", p.reward->r_c},
                     {"r_d", p.reward->r_d},         {"r_shake", p.reward->r_shake},
                     {"r_o", p.reward->r_o},         {"r_e", p.reward->r_e},
                     {"total", p.reward->total}};
    }
    j["collision"] = p.collision;
    out << j.dump() << '\n';
  }
}

Trajectory read_trajectory_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("trajectory: cannot open " + path);
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": " + e.what());
    }
    if (j.value("type", "") == "meta") {
      traj.outcome = j.value("outcome", "running");
      continue;
    }
    TrajectoryPoint p;
    p.t = j.at("t").get<double>();
    p.q = vec_from_json(j.at("q"));
    const auto& ee = j.at("ee");
    p.ee.position = Vec3(ee.at("xyz").at(0).get<double>(), ee.at("xyz").at(1).get<double>(),
                         ee.at("xyz").at(2).get<double>());
    const auto& quat = ee.at("quat");
    p.ee.orientation = Eigen::Quaterniond(quat.at(0).get<double>(), quat.at(1).get<double>(),
                                          quat.at(2).get<double>(), quat.at(3).get<double>());
    if (j.contains("action")) p.action = vec_from_json(j.at("action"));
    if (j.contains("reward")) {
      RewardBreakdown r;
      const auto& rj = j.at("reward");
      r.r_suc = rj.at("r_suc").get<double>();
      r.r_c = rj.at("r_c").get<double>();
      r.r_d = rj.at("r_d").get<double>();
      r.r_shake = rj.at("r_shake").get<double>();
      r.r_o = rj.at("r_o").get<double>();
      r.r_e = rj.at("r_e").get<double>();
      r.total = rj.at("total").get<double>();
      p.reward = r;
    }
    p.collision = j.value("collision", false);
    traj.points.push_back(std::move(p));
  }
  return traj;
}

void export_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("trajectory: cannot open " + path + " for writing");
  out << "t";
  const int n = traj.points.empty() ? 0 : static_cast<int>(traj.points.front().q.size());
  for (int i = 0; i < n; ++i) out << ",q" << i;
  out << ",x,y,z,qw,qx,qy,qz,reward,collision\n";
  for (const auto& p : traj.points) {
    out << p.t;
    for (Eigen::Index i = 0; i < p.q.size(); ++i) out << ',' << p.q[i];
    out << ',' << p.ee.position.x() << ',' << p.ee.position.y() << ',' << p.ee.position.z()
        << ',' << p.ee.orientation.w() << ',' << p.ee.orientation.x() << ','
        << p.ee.orientation.y() << ',' << p.ee.orientation.z() << ','
        << (p.reward ? p.reward->total : 0.0) << ',' << (p.collision ? 1 : 0) << '\n';
  }
}

}  // namespace armplan
