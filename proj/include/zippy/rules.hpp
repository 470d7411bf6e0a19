#pragma once

#include <array>
#include <string>

#include "zippy/params.hpp"

namespace zippy {

/// One design-rule evaluation. Margin is signed in the rule's natural unit
/// (meters for the geometric rules, N*m for the torque rule); positive
/// means satisfied, and `passed` is the strict test margin > 0.
struct RuleResult {
  std::string name;
  double margin = 0.0;
  bool passed = false;
  std::string detail;
};

struct RuleReport {
  std::array<RuleResult, 5> rules;
  bool all_passed = false;
};

/// Checks the five static design rules for a self-starting curved-foot
/// walker:
///   1. CG below the foot center of curvature: foot_center_height - cg_offset_z.
///   2. Hip above the frontal center of curvature at the resting contact:
///      hip_height - b^2/c.
///   3. Hip axis behind the CG: cg_offset_x.
///   4. Lateral gap between the feet: foot_gap.
///   5. Motor stall torque exceeds the torque needed to pivot one foot
///      carrying half the weight about the hip axis:
///      stall_torque - mu * (m g / 2) * hip_height.
RuleReport check_design_rules(const WalkerParams& params);

/// Contact point of one foot for a body at the given orientation: the point
/// of the foot ellipsoid extremal in the world-down direction. Returns the
/// point and the outward surface normal there, both in the body frame.
struct SupportPoint {
  Vec3 point = Vec3::Zero();   // body frame, hip origin
  Vec3 normal = Vec3::Zero();  // body frame, unit
};

SupportPoint foot_support_point(const WalkerParams& params, const Quat& orientation, Foot foot);

}  // namespace zippy
