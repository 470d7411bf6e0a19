#include "zippy/rimless.hpp"

#include <cmath>

namespace zippy {

namespace {
constexpr double kHalfPi = 1.5707963267948966;
}

void RimlessWheelParams::validate() const {
  if (!(spoke_length > 0.0)) throw ValidationError("spoke_length must be positive");
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  if (!(half_angle >= 0.0) || half_angle >= kHalfPi) {
    throw ValidationError("half_angle must lie in [0, pi/2)");
  }
  if (!(slope >= 0.0) || slope >= kHalfPi) {
    throw ValidationError("slope must lie in [0, pi/2)");
  }
}

RimlessStride rimless_wheel_return_map(const RimlessWheelParams& params, double omega) {
  params.validate();
  RimlessStride out;
  // A slope at or beyond the half-angle never hands support to the next
  // spoke (the post-transfer spoke would already start past vertical);
  // outside the model's walking regime.
  if (params.slope > 0.0 && params.slope >= params.half_angle) return out;
  if (omega < 0.0) return out;

  const double g_over_l = kGravity / params.spoke_length;
  const double vault = 2.0 * g_over_l * (1.0 - std::cos(params.half_angle - params.slope));
  if (omega * omega < vault) return out;

  const double gain = 4.0 * g_over_l * std::sin(params.half_angle) * std::sin(params.slope);
  const double omega_minus = std::sqrt(omega * omega + gain);
  out.completed = true;
  out.omega_next = rimless_impact_ratio(params) * omega_minus;
  return out;
}

double rimless_impact_ratio(const RimlessWheelParams& params) {
  return std::cos(2.0 * params.half_angle);
}

std::optional<double> rimless_wheel_fixed_point(const RimlessWheelParams& params) {
  params.validate();
  if (params.slope <= 0.0 || params.slope >= params.half_angle) return std::nullopt;
  const double ratio = rimless_impact_ratio(params);
  const double c2 = ratio * ratio;
  if (c2 >= 1.0) return std::nullopt;

  const double gain = 4.0 * kGravity / params.spoke_length * std::sin(params.half_angle) *
                      std::sin(params.slope);
  const double omega_star = std::sqrt(gain * c2 / (1.0 - c2));
  // The fixed point only describes a real cycle if the wheel vaults at that rate.
  if (!rimless_wheel_return_map(params, omega_star).completed) return std::nullopt;
  return omega_star;
}

}  // namespace zippy
