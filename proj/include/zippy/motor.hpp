#pragma once

#include "zippy/params.hpp"

namespace zippy {

/// Winding current for a commanded terminal voltage at the given joint rate.
/// The back EMF seen at the terminals scales with the gear ratio because the
/// rotor spins that much faster than the output shaft.
double motor_current(const MotorParams& motor, double voltage, double joint_rate);

/// Output-shaft torque for a commanded terminal voltage at the given joint
/// rate: electromagnetic torque through the gearbox (with its efficiency)
/// minus viscous friction at the output.
double motor_torque(const MotorParams& motor, double voltage, double joint_rate);

/// Electrical power drawn from the supply (signed).
double motor_power(const MotorParams& motor, double voltage, double joint_rate);

}  // namespace zippy
