#pragma once

#include "zippy/types.hpp"

namespace zippy {

/// Brushed DC gearmotor driving the hip joint.
///
/// Shaft torque delivered at the hip, for command voltage V and hip rate w:
///   tau = efficiency * gear_ratio * torque_constant * (V - back_emf_constant * gear_ratio * w)
///         / winding_resistance  -  viscous_friction * w
/// Winding current is (V - back_emf_constant * gear_ratio * w) / winding_resistance.
struct MotorParams {
  double torque_constant = 1.2e-3;    // N*m/A, motor side
  double back_emf_constant = 1.2e-3;  // V*s/rad, motor side
  double winding_resistance = 5.0;    // ohm
  double gear_ratio = 26.0;           // output revs : motor revs = 1 : gear_ratio
  double gearbox_efficiency = 0.8;    // (0, 1]
  double viscous_friction = 1.0e-6;   // N*m*s/rad at the output shaft
  double max_voltage = 3.2;           // V, H-bridge supply rail

  /// Output-shaft torque at zero speed and full rail voltage.
  double stall_torque() const {
    return gearbox_efficiency * gear_ratio * torque_constant * max_voltage / winding_resistance;
  }

  void validate() const;
};

/// Full physical description of the walker.
///
/// Geometry datum ("design pose"): ground plane z = 0, robot upright, hip
/// joint center at (0, 0, hip_height), +x the walking direction, +y left.
/// Per-body quantities (body_com_*, body_inertia_*) are expressed in the
/// body frame, which has its origin at the hip joint center and is aligned
/// with the world axes in the design pose with hip angle zero.
///
/// Each leg-foot-arm assembly is one rigid body. The foot is a rounded
/// shell modeled as a full ellipsoid for contact purposes: semi-axes
/// (sagittal, frontal, vertical), center on its own side of the sagittal
/// midplane at lateral offset +/- foot_gap/2, raised to foot_center_height
/// in the design pose. The half-range of the hip joint is hard_stop_angle.
struct WalkerParams {
  double mass_total = 0.025;  // kg
  double mass_left = 0.0125;
  double mass_right = 0.0125;

  double height_total = 0.0364;  // m, top of head above ground in design pose
  double width_total = 0.0505;   // m, lateral extent

  double foot_semi_axis_sagittal = 0.030;   // a
  double foot_semi_axis_frontal = 0.0247;   // b
  double foot_semi_axis_vertical = 0.0247;  // defaults to b: circular frontal section
  double foot_center_height = 0.025;        // ellipsoid center height in design pose
  double hip_height = 0.025;                // hip joint center height in design pose
  double foot_gap = 0.006;                  // lateral distance between foot ground-tangency points

  double cg_offset_x = 0.003;   // combined CG forward of the hip axis
  double cg_offset_z = 0.0103;  // combined CG height in design pose

  Vec3 body_com_left = Vec3(0.003, 0.010, -0.0147);  // body frame (hip origin)
  Vec3 body_com_right = Vec3(0.003, -0.010, -0.0147);
  Mat3 body_inertia_left = default_body_inertia();  // about own CoM, body frame
  Mat3 body_inertia_right = default_body_inertia();

  double hard_stop_angle = 0.29670597283903605;  // rad (17 deg), |hip angle| limit
  double hard_stop_restitution = 0.0;            // 0 = plastic stop impact

  MotorParams motor;

  double friction_coefficient = 0.8;  // static/kinetic, foot on ground

  /// Thin-shell-ellipsoid foot plus rectangular-prism leg estimate for one
  /// 12.5 g body of the default build. Placeholder for unmeasured hardware.
  static Mat3 default_body_inertia();

  /// Foot ellipsoid center in the body frame.
  Vec3 foot_center(Foot f) const {
    const double side = (f == Foot::Left) ? 1.0 : -1.0;
    return Vec3(0.0, side * 0.5 * foot_gap, foot_center_height - hip_height);
  }

  Vec3 foot_semi_axes() const {
    return Vec3(foot_semi_axis_sagittal, foot_semi_axis_frontal, foot_semi_axis_vertical);
  }

  const Vec3& body_com(Foot f) const { return f == Foot::Left ? body_com_left : body_com_right; }
  const Mat3& body_inertia(Foot f) const {
    return f == Foot::Left ? body_inertia_left : body_inertia_right;
  }
  double body_mass(Foot f) const { return f == Foot::Left ? mass_left : mass_right; }

  /// Throws ValidationError on non-physical or internally inconsistent
  /// values (non-positive masses or dimensions, per-body totals that do not
  /// reproduce mass_total or the CG offsets, non-positive-definite inertia,
  /// sagittal semi-axis smaller than frontal).
  void validate() const;
};

/// Per-body mass properties echoed in the canonical hip-centered frame.
struct MassProperties {
  double mass_left = 0.0;
  double mass_right = 0.0;
  Vec3 com_left = Vec3::Zero();
  Vec3 com_right = Vec3::Zero();
  Mat3 inertia_left = Mat3::Zero();
  Mat3 inertia_right = Mat3::Zero();
  Vec3 combined_com = Vec3::Zero();  // hip frame
  double combined_mass = 0.0;
};

/// Aggregates per-body properties and cross-checks them against the
/// combined-CG fields (1e-9 m tolerance). Throws ValidationError on
/// inconsistency.
MassProperties mass_properties(const WalkerParams& params);

/// Built-in parameter sets matching the shipped configuration files.
WalkerParams zippy_params();
WalkerParams scaled_mugatu_params();

}  // namespace zippy
