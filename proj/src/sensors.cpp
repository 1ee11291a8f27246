#include "armplan/sensors.hpp"

#include <cmath>
#include <stdexcept>

#include "armplan/errors.hpp"

namespace armplan {

std::vector<LocalRay> cone_ring(int count, double polar_rad, double azimuth_offset_rad,
                                double axis_sign) {
  std::vector<LocalRay> rays;
  rays.reserve(count);
  const double sp = std::sin(polar_rad);
  const double cp = std::cos(polar_rad);
  for (int i = 0; i < count; ++i) {
    const double az = azimuth_offset_rad + 2.0 * M_PI * i / count;
    LocalRay r;
    r.direction = Vec3(sp * std::cos(az), sp * std::sin(az), axis_sign * cp).normalized();
    rays.push_back(r);
  }
  return rays;
}

std::vector<LocalRay> cylinder_band(int stations, int per_station, double radius, double z0,
                                    double z1) {
  std::vector<LocalRay> rays;
  rays.reserve(stations * per_station);
  for (int s = 0; s < stations; ++s) {
    const double az = 2.0 * M_PI * s / stations;
    const Vec3 radial(std::cos(az), std::sin(az), 0.0);
    for (int k = 0; k < per_station; ++k) {
      const double z = per_station == 1 ? z0 : z0 + (z1 - z0) * k / (per_station - 1);
      LocalRay r;
      r.origin = radius * radial + Vec3(0.0, 0.0, z);
      r.direction = radial;
      rays.push_back(r);
    }
  }
  return rays;
}

BundleSet build_default_bundles() {
  BundleSet b;

  b.wrist.mount = "wrist";
  auto up = cone_ring(12, 40.0 * M_PI / 180.0, 0.0, +1.0);
  auto down = cone_ring(12, 40.0 * M_PI / 180.0, 0.0, -1.0);
  b.wrist.rays = up;
  b.wrist.rays.insert(b.wrist.rays.end(), down.begin(), down.end());

  b.ee_surface.mount = "ee_surface";
  b.ee_surface.rays = cylinder_band(8, 10, 0.03, -0.05, 0.05);

  b.ee_tip.mount = "ee_tip";
  auto ring_a = cone_ring(12, 20.0 * M_PI / 180.0, 0.0, +1.0);
  auto ring_b = cone_ring(12, 20.0 * M_PI / 180.0, 15.0 * M_PI / 180.0, +1.0);
  b.ee_tip.rays = ring_a;
  b.ee_tip.rays.insert(b.ee_tip.rays.end(), ring_b.begin(), ring_b.end());
  LocalRay axial;
  axial.direction = Vec3::UnitZ();
  b.ee_tip.rays.push_back(axial);

  return b;
}

namespace {

void cast_bundle(const Scene& scene, const Pose& mount, const RayBundleSpec& bundle,
                 std::vector<double>& out) {
  const Mat3 R = mount.rotation();
  for (const auto& ray : bundle.rays) {
    const Vec3 origin = mount.position + R * ray.origin;
    const Vec3 dir = R * ray.direction;
    out.push_back(ray_cast(scene, origin, dir, bundle.max_range).fraction);
  }
}

}  // namespace

std::vector<double> sense(const Scene& scene, const std::map<std::string, Pose>& mount_poses,
                          const BundleSet& bundles) {
  std::vector<double> fractions;
  fractions.reserve(bundles.total_rays());
  for (const RayBundleSpec* b : {&bundles.wrist, &bundles.ee_surface, &bundles.ee_tip}) {
    const auto it = mount_poses.find(b->mount);
    if (it == mount_poses.end())
      throw std::invalid_argument("sense: missing mount pose '" + b->mount + "'");
    cast_bundle(scene, it->second, *b, fractions);
  }
  return fractions;
}

std::map<std::string, Pose> mount_poses(const RobotModel& model, const Eigen::VectorXd& q) {
  std::map<std::string, Pose> poses;
  for (const auto& m : model.mounts) {
    const Eigen::Isometry3d world = frame_transform(model, q, m.frame) * m.local;
    poses[m.name] = Pose(world.translation(), Eigen::Quaterniond(world.linear()));
  }
  return poses;
}

Eigen::VectorXd Observation::to_vector() const {
  Eigen::VectorXd v(kObservationDim);
  int k = 0;
  for (double j : joints) v[k++] = j;
  for (int i = 0; i < 3; ++i) v[k++] = goal_delta[i];
  for (int i = 0; i < 3; ++i) v[k++] = ee_euler[i];
  v[k++] = goal_distance;
  for (double r : rays) v[k++] = r;
  return v;
}

Observation assemble_observation(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Vec3& goal, const Scene& scene, const BundleSet& bundles) {
  if (model.dof() != 6)
    throw ShapeMismatch("assemble_observation: observation layout expects a 6-dof robot");
  if (bundles.total_rays() != kRayCount)
    throw ShapeMismatch("assemble_observation: bundle set must total " +
                        std::to_string(kRayCount) + " rays");

  Observation obs;
  for (int i = 0; i < 6; ++i) obs.joints[static_cast<size_t>(i)] = q[i];
  const Pose ee = forward_kinematics(model, q);
  obs.goal_delta = goal - ee.position;
  obs.ee_euler = ee.rpy();
  obs.goal_distance = obs.goal_delta.norm();

  const auto fractions = sense(scene, mount_poses(model, q), bundles);
  for (int i = 0; i < kRayCount; ++i) obs.rays[static_cast<size_t>(i)] = fractions[static_cast<size_t>(i)];
  return obs;
}

}  // namespace armplan
