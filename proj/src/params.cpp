#include "zippy/params.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace zippy {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

bool positive_definite(const Mat3& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void MotorParams::validate() const {
  require(torque_constant > 0.0, "motor: torque_constant must be positive");
  require(back_emf_constant > 0.0, "motor: back_emf_constant must be positive");
  require(winding_resistance > 0.0, "motor: winding_resistance must be positive");
  require(gear_ratio >= 1.0, "motor: gear_ratio must be at least 1");
  require(gearbox_efficiency > 0.0 && gearbox_efficiency <= 1.0,
          "motor: gearbox_efficiency must lie in (0, 1]");
  require(viscous_friction >= 0.0, "motor: viscous_friction must be non-negative");
  require(max_voltage > 0.0, "motor: max_voltage must be positive");
}

Mat3 WalkerParams::default_body_inertia() {
  // Foot: 4 g thin ellipsoid shell, semi-axes (30, 24.7, 24.7) mm,
  // I = m/3 * diag(b^2+c^2, a^2+c^2, a^2+b^2). Leg and arm: 8.5 g prism,
  // 12 x 20 x 30 mm. Offsets between the two parts are folded in as a
  // small parallel-axis allowance and the result rounded.
  Mat3 inertia = Mat3::Zero();
  inertia.diagonal() << 3.0e-6, 3.4e-6, 2.6e-6;
  return inertia;
}

void WalkerParams::validate() const {
  require(mass_total > 0.0, "mass_total must be positive");
  require(mass_left > 0.0 && mass_right > 0.0, "per-body masses must be positive");
  require(std::abs(mass_left + mass_right - mass_total) <= 1e-12 * mass_total,
          "per-body masses must sum to mass_total");
  require(height_total > 0.0 && width_total > 0.0, "envelope dimensions must be positive");
  require(foot_semi_axis_sagittal > 0.0 && foot_semi_axis_frontal > 0.0 &&
              foot_semi_axis_vertical > 0.0,
          "foot semi-axes must be positive");
  require(foot_semi_axis_sagittal >= foot_semi_axis_frontal,
          "foot sagittal semi-axis must not be smaller than frontal");
  require(foot_center_height > 0.0, "foot_center_height must be positive");
  require(hip_height > 0.0, "hip_height must be positive");
  require(foot_gap > 0.0, "foot_gap must be positive");
  require(hard_stop_angle > 0.0 && hard_stop_angle < M_PI / 2.0,
          "hard_stop_angle must lie in (0, pi/2)");
  require(hard_stop_restitution >= 0.0 && hard_stop_restitution <= 1.0,
          "hard_stop_restitution must lie in [0, 1]");
  require(friction_coefficient > 0.0, "friction_coefficient must be positive");
  require(positive_definite(body_inertia_left) && positive_definite(body_inertia_right),
          "body inertia tensors must be symmetric positive definite");
  motor.validate();

  const Vec3 com = (mass_left * body_com_left + mass_right * body_com_right) / mass_total;
  const Vec3 expected(cg_offset_x, 0.0, cg_offset_z - hip_height);
  if ((com - expected).cwiseAbs().maxCoeff() > 1e-9) {
    std::ostringstream os;
    os << "per-body CoMs give combined CoM (" << com.transpose()
       << ") in the hip frame, expected (" << expected.transpose()
       << ") from cg_offset_x/cg_offset_z";
    throw ValidationError(os.str());
  }
}

MassProperties mass_properties(const WalkerParams& params) {
  params.validate();
  MassProperties mp;
  mp.mass_left = params.mass_left;
  mp.mass_right = params.mass_right;
  mp.com_left = params.body_com_left;
  mp.com_right = params.body_com_right;
  mp.inertia_left = params.body_inertia_left;
  mp.inertia_right = params.body_inertia_right;
  mp.combined_mass = params.mass_left + params.mass_right;
  mp.combined_com =
      (params.mass_left * params.body_com_left + params.mass_right * params.body_com_right) /
      mp.combined_mass;
  return mp;
}

WalkerParams zippy_params() { return WalkerParams{}; }

WalkerParams scaled_mugatu_params() {
  WalkerParams p;
  p.mass_total = 0.0247;
  p.mass_left = 0.01235;
  p.mass_right = 0.01235;
  p.height_total = 0.0364;
  p.width_total = 0.0505;
  p.foot_semi_axis_sagittal = 0.0191;  // spherical foot: all semi-axes equal
  p.foot_semi_axis_frontal = 0.0191;
  p.foot_semi_axis_vertical = 0.0191;
  p.foot_center_height = 0.0191;  // sphere resting on the ground, center not raised
  p.cg_offset_x = 0.0029;
  p.cg_offset_z = 0.012;
  p.body_com_left = Vec3(0.0029, 0.010, -0.013);
  p.body_com_right = Vec3(0.0029, -0.010, -0.013);
  return p;
}

}  // namespace zippy
