#pragma once

#include <optional>

#include "zippy/params.hpp"

namespace zippy {

enum class Mode { StanceLeft, StanceRight, Flight };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::StanceLeft: return "stance_left";
    case Mode::StanceRight: return "stance_right";
    case Mode::Flight: return "flight";
  }
  return "?";
}

inline Foot stance_foot(Mode m) {
  return m == Mode::StanceRight ? Foot::Right : Foot::Left;
}

/// Full state of the hybrid walker.
///
/// The pose stored is that of the *reference* body, which is always the
/// stance body in stance modes and the last stance body in flight. The hip
/// angle is the physical joint coordinate (right body relative to the left,
/// about the +y hip axis) independent of which body is the reference, so a
/// support transfer only re-expresses the pose, never the joint coordinate.
struct HybridState {
  double time = 0.0;
  Mode mode = Mode::StanceLeft;
  Foot reference = Foot::Left;

  Vec3 hip_position = Vec3::Zero();       // hip joint center, world
  Quat orientation = Quat::Identity();    // reference body -> world
  double hip_angle = 0.0;                 // rad, right relative to left

  Vec3 linear_velocity = Vec3::Zero();    // of the hip point, world
  Vec3 angular_velocity = Vec3::Zero();   // reference body, world
  double hip_rate = 0.0;                  // rad/s

  bool stop_engaged = false;  // hip resting on the hard stop
  int stop_side = 0;          // sign of hip_angle when engaged, else 0

  // Height of the support plane under the stance foot, sampled from the
  // terrain at touchdown. Rolling is resolved against this plane so a foot
  // that migrates across a cell border mid-stance does not see a cliff; the
  // simulator raises a support-change event when the true terrain under the
  // contact departs from it.
  double contact_height = 0.0;

  /// Orientation of either body, composing the hip rotation for the
  /// non-reference side.
  Quat body_orientation(Foot f) const {
    if (f == reference) return orientation;
    const double sign = (reference == Foot::Left) ? 1.0 : -1.0;
    return orientation * Quat(Eigen::AngleAxisd(sign * hip_angle, Vec3::UnitY()));
  }

  /// World angular velocity of either body.
  Vec3 body_angular_velocity(Foot f) const {
    if (f == reference) return angular_velocity;
    const double sign = (reference == Foot::Left) ? 1.0 : -1.0;
    return angular_velocity + sign * hip_rate * hip_axis_world();
  }

  /// The hip joint axis (+y of the reference body) in world coordinates.
  Vec3 hip_axis_world() const { return orientation * Vec3::UnitY(); }

  void validate(const WalkerParams& params) const;
};

/// Ground reaction resolved at the single active contact point.
struct ContactInfo {
  bool active = false;
  Foot foot = Foot::Left;
  Vec3 point = Vec3::Zero();   // world
  Vec3 force = Vec3::Zero();   // ground on foot, world
  double normal_force = 0.0;
  double tangential_force = 0.0;
  bool friction_saturated = false;  // required force leaves the friction cone
};

}  // namespace zippy
