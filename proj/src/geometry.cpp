#include "armplan/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace armplan {

RayBoxHit ray_box_intersect(const Vec3& origin, const Vec3& dir, double max_t, const Box& box) {
  // Slab method in the box frame.
  const Eigen::Isometry3d inv = box.pose.inverse();
  const Vec3 o = inv * origin;
  const Vec3 d = inv.linear() * dir;

  double t_near = 0.0;
  double t_far = max_t;
  for (int i = 0; i < 3; ++i) {
    const double h = box.half_extents[i];
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < -h || o[i] > h) return {};
      continue;
    }
    double t0 = (-h - o[i]) / d[i];
    double t1 = (h - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return {};
  }
  return {true, t_near};
}

bool point_in_box(const Vec3& p, const Box& box) {
  const Vec3 local = box.pose.inverse() * p;
  return (local.cwiseAbs().array() <= box.half_extents.array()).all();
}

double point_box_distance(const Vec3& p, const Box& box) {
  const Vec3 local = box.pose.inverse() * p;
  const Vec3 excess = (local.cwiseAbs() - box.half_extents).cwiseMax(0.0);
  return excess.norm();
}

double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box) {
  const Eigen::Isometry3d inv = box.pose.inverse();
  const Vec3 la = inv * a;
  const Vec3 lb = inv * b;
  const Vec3& h = box.half_extents;

  auto dist_at = [&](double t) {
    const Vec3 p = la + t * (lb - la);
    const Vec3 excess = (p.cwiseAbs() - h).cwiseMax(0.0);
    return excess.norm();
  };

  const double da = dist_at(0.0);
  const double db = dist_at(1.0);
  if (da == 0.0 || db == 0.0) return 0.0;

  // Ternary search on the convex distance profile.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (dist_at(m1) <= dist_at(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::min({da, db, dist_at(0.5 * (lo + hi))});
}

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  // Ericson, Real-Time Collision Detection, 5.1.9.
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double A = d1.dot(d1);
  const double E = d2.dot(d2);
  const double F = d2.dot(r);
  double s, t;

  constexpr double kEps = 1e-14;
  if (A <= kEps && E <= kEps) {
    return r.norm();
  }
  if (A <= kEps) {
    s = 0.0;
    t = std::clamp(F / E, 0.0, 1.0);
  } else {
    const double C = d1.dot(r);
    if (E <= kEps) {
      t = 0.0;
      s = std::clamp(-C / A, 0.0, 1.0);
    } else {
      const double B = d1.dot(d2);
      const double denom = A * E - B * B;
      s = denom > kEps ? std::clamp((B * F - C * E) / denom, 0.0, 1.0) : 0.0;
      t = (B * s + F) / E;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-C / A, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((B - C) / A, 0.0, 1.0);
      }
    }
  }
  const Vec3 c1 = p1 + s * d1;
  const Vec3 c2 = p2 + t * d2;
  return (c1 - c2).norm();
}

}  // namespace armplan
