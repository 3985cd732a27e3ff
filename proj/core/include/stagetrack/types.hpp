#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace stagetrack {

/// Stage coordinates in meters: x along the stage width, y along its depth,
/// z height above the floor (right-handed).
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using TagId = std::uint16_t;
using AnchorId = std::uint16_t;
using FrameIndex = std::int64_t;

struct Anchor {
  AnchorId id = 0;
  Vec3 position = Vec3::Zero();
  double max_range = 30.0;
};

/// Closed axis-aligned box.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool valid() const { return (min.array() <= max.array()).all(); }
};

enum class SolveMode { Planar, Full3d };

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline double horizontal_distance(const Vec3& a, const Vec3& b) {
  return (a.head<2>() - b.head<2>()).norm();
}

}  // namespace stagetrack
