#include "zippy/motor.hpp"

#include <algorithm>

namespace zippy {

namespace {
// The H-bridge cannot deliver more than the supply rail; commands beyond it
// saturate.
double rail_clamp(const MotorParams& motor, double voltage) {
  return std::clamp(voltage, -motor.max_voltage, motor.max_voltage);
}
}  // namespace

double motor_current(const MotorParams& motor, double voltage, double joint_rate) {
  const double back_emf = motor.back_emf_constant * motor.gear_ratio * joint_rate;
  return (rail_clamp(motor, voltage) - back_emf) / motor.winding_resistance;
}

double motor_torque(const MotorParams& motor, double voltage, double joint_rate) {
  const double current = motor_current(motor, voltage, joint_rate);
  const double electromagnetic =
      motor.gearbox_efficiency * motor.gear_ratio * motor.torque_constant * current;
  return electromagnetic - motor.viscous_friction * joint_rate;
}

double motor_power(const MotorParams& motor, double voltage, double joint_rate) {
  return rail_clamp(motor, voltage) * motor_current(motor, voltage, joint_rate);
}

}  // namespace zippy
