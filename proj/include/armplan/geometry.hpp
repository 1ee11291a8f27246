#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "armplan/pose.hpp"

namespace armplan {

// Oriented box in world coordinates.
struct Box {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  Vec3 half_extents = Vec3::Ones();
};

struct RayBoxHit {
  bool hit = false;
  double t = 0.0;  // distance along the (unit) ray, 0 when the origin is inside
};

// Nearest intersection of ray [origin, origin + t*dir], t in [0, max_t].
// An origin inside the box reports t = 0.
RayBoxHit ray_box_intersect(const Vec3& origin, const Vec3& dir, double max_t, const Box& box);

bool point_in_box(const Vec3& p, const Box& box);

// Euclidean distance from a point to the box surface (0 inside).
double point_box_distance(const Vec3& p, const Box& box);

// Distance between segment [a, b] and the box (0 when they intersect).
// Point-to-convex-set distance is convex along the segment, so the minimum
// is found by ternary search after cheap accept/reject bounds.
double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box);

// Closest distance between segments [p1,q1] and [p2,q2].
double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2);

inline bool capsule_intersects_box(const Vec3& a, const Vec3& b, double radius, const Box& box) {
  return segment_box_distance(a, b, box) <= radius;
}

}  // namespace armplan
