#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "armplan/kinematics.hpp"
#include "armplan/pose.hpp"
#include "armplan/scene.hpp"

namespace armplan {

struct LocalRay {
  Vec3 origin = Vec3::Zero();  // mount frame, m
  Vec3 direction = Vec3::UnitZ();
};

// One virtual-laser bundle attached to a named mount frame.
struct RayBundleSpec {
  std::string mount;  // "wrist" | "ee_surface" | "ee_tip"
  std::vector<LocalRay> rays;
  double max_range = 0.4;
};

struct BundleSet {
  RayBundleSpec wrist;
  RayBundleSpec ee_surface;
  RayBundleSpec ee_tip;

  int total_rays() const {
    return static_cast<int>(wrist.rays.size() + ee_surface.rays.size() + ee_tip.rays.size());
  }
};

inline constexpr int kRayCount = 129;
inline constexpr int kRobotStateDim = 13;
inline constexpr int kObservationDim = kRobotStateDim + kRayCount;

// Default arrangement: wrist 24 rays (two 12-ray cone rings, azimuth step 30
// deg, polar 40 deg, opening up/down the mount axis), end-effector surface 80
// rays (8 azimuth stations at 45 deg x 10 rays along the tool height, radial),
// tip 25 rays (two staggered 12-ray rings at polar 20 deg plus one axial).
BundleSet build_default_bundles();

// Ray generators the robot config uses to describe bundles.
std::vector<LocalRay> cone_ring(int count, double polar_rad, double azimuth_offset_rad,
                                double axis_sign);
std::vector<LocalRay> cylinder_band(int stations, int per_station, double radius, double z0,
                                    double z1);

// Casts every bundle against the scene. Output order: wrist, ee_surface,
// ee_tip; values are hit fractions in [0, 1].
std::vector<double> sense(const Scene& scene, const std::map<std::string, Pose>& mount_poses,
                          const BundleSet& bundles);

struct Observation {
  std::array<double, 6> joints{};      // rad
  Vec3 goal_delta = Vec3::Zero();      // goal - ee position, m
  Vec3 ee_euler = Vec3::Zero();        // fixed-axis XYZ rpy, rad
  double goal_distance = 0.0;          // |goal_delta|, m
  std::array<double, kRayCount> rays{};  // hit fractions

  // Flat layout: joints(6), goal_delta(3), ee_euler(3), goal_distance(1), rays(129).
  Eigen::VectorXd to_vector() const;
};

std::map<std::string, Pose> mount_poses(const RobotModel& model, const Eigen::VectorXd& q);

Observation assemble_observation(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Vec3& goal, const Scene& scene, const BundleSet& bundles);

}  // namespace armplan
