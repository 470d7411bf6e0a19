#include "zippy/rules.hpp"

#include <cmath>
#include <sstream>

#include "zippy/geometry.hpp"

namespace zippy {

namespace {

std::string format_mm(double meters) {
  std::ostringstream os;
  os << meters * 1e3 << " mm";
  return os.str();
}

}  // namespace

RuleReport check_design_rules(const WalkerParams& params) {
  params.validate();
  RuleReport report;

  {
    RuleResult& r = report.rules[0];
    r.name = "cg_below_foot_center";
    r.margin = params.foot_center_height - params.cg_offset_z;
    r.detail = "foot center " + format_mm(params.foot_center_height) + " vs CG height " +
               format_mm(params.cg_offset_z);
  }
  {
    RuleResult& r = report.rules[1];
    r.name = "hip_above_frontal_curvature_center";
    const double frontal_radius = params.foot_semi_axis_frontal * params.foot_semi_axis_frontal /
                                  params.foot_semi_axis_vertical;
    r.margin = params.hip_height - frontal_radius;
    r.detail = "hip " + format_mm(params.hip_height) + " vs frontal curvature center " +
               format_mm(frontal_radius) + " above contact";
  }
  {
    RuleResult& r = report.rules[2];
    r.name = "hip_behind_cg";
    r.margin = params.cg_offset_x;
    r.detail = "CG " + format_mm(params.cg_offset_x) + " ahead of the hip axis";
  }
  {
    RuleResult& r = report.rules[3];
    r.name = "foot_gap_present";
    r.margin = params.foot_gap;
    r.detail = "lateral gap " + format_mm(params.foot_gap);
  }
  {
    RuleResult& r = report.rules[4];
    r.name = "stall_torque_beats_friction";
    const double friction_torque = params.friction_coefficient *
                                   (0.5 * params.mass_total * kGravity) * params.hip_height;
    r.margin = params.motor.stall_torque() - friction_torque;
    std::ostringstream os;
    os << "stall " << params.motor.stall_torque() * 1e3 << " mN*m vs pivot friction "
       << friction_torque * 1e3 << " mN*m";
    r.detail = os.str();
  }

  report.all_passed = true;
  for (auto& r : report.rules) {
    r.passed = r.margin > 0.0;
    report.all_passed = report.all_passed && r.passed;
  }
  return report;
}

SupportPoint foot_support_point(const WalkerParams& params, const Quat& orientation, Foot foot) {
  const Vec3 down_body = orientation.conjugate() * world_down();
  const Vec3 axes = params.foot_semi_axes();
  SupportPoint sp;
  const Vec3 offset = ellipsoid_support(axes, down_body);
  sp.point = params.foot_center(foot) + offset;
  sp.normal = ellipsoid_normal(axes, offset);
  return sp;
}

}  // namespace zippy
