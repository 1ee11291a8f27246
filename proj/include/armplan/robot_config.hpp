#pragma once

#include <string>

#include "armplan/kinematics.hpp"
#include "armplan/sensors.hpp"

namespace armplan {

struct RobotDescription {
  RobotModel model;
  BundleSet bundles;
};

// Robot config file (JSON): dh_rows, joint_limits (rad), ee_transform
// (row-major 16 reals), link_capsules, sensor_frames, sensors, home,
// max_joint_speed. Angles in radians, lengths in meters.
RobotDescription load_robot_config(const std::string& path);
RobotDescription robot_from_json_text(const std::string& text,
                                      const std::string& origin = "<string>");

}  // namespace armplan
