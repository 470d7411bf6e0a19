#pragma once

#include <optional>

#include "zippy/types.hpp"

namespace zippy {

/// Planar spoked wheel rolling downhill: the classic reduction of bipedal
/// walking to a one-degree-of-freedom hybrid system. All mass sits at the
/// hub; spokes of equal length are spaced 2*half_angle apart; the support
/// transfer from one spoke to the next is a plastic impact.
struct RimlessWheelParams {
  double spoke_length = 0.25;             // m
  double half_angle = 0.2617993877991494; // rad, half the inter-spoke angle (15 deg)
  double slope = 0.05235987755982988;     // rad, downhill grade (3 deg)
  double mass = 1.0;                      // kg, hub point mass

  void validate() const;
};

/// One stride of the stride-to-stride map. `omega_next` is the angular rate
/// just after the next support transfer; when the wheel cannot complete the
/// stride (it fails to vault over the upright spoke, or the slope is at
/// least the half-angle so the geometry never hands support forward) the
/// stride is reported not completed and the wheel rocks back.
struct RimlessStride {
  bool completed = false;
  double omega_next = 0.0;
};

/// Stride map omega -> omega_next, taking the post-transfer rate at the
/// start of a stride (rad/s, positive rolling downhill).
///
/// Derivation, with L the spoke length, alpha the half-angle, gamma the
/// slope: measuring the stance spoke angle from true vertical, a stride runs
/// from gamma - alpha to gamma + alpha. The hub energy balance over that arc
/// gives the pre-transfer rate
///   omega_minus^2 = omega^2 + (4 g / L) sin(alpha) sin(gamma),
/// and the plastic transfer onto the next spoke, which conserves angular
/// momentum about the new contact, scales the rate by cos(2 alpha). The
/// wheel only completes the arc if it can pass the highest point
/// (spoke angle zero), reached when  omega^2 >= (2 g / L)(1 - cos(alpha - gamma)).
RimlessStride rimless_wheel_return_map(const RimlessWheelParams& params, double omega);

/// Angular-rate ratio across one support transfer: cos(2 * half_angle).
double rimless_impact_ratio(const RimlessWheelParams& params);

/// Steady rolling rate: the positive fixed point of the stride map,
///   omega*^2 = (4 g / L) sin(alpha) sin(gamma) cos^2(2 alpha) / (1 - cos^2(2 alpha)),
/// obtained by requiring the stride map to return its input. Empty when no
/// cycle exists: zero slope (nothing replaces the impact loss), slope at or
/// beyond the half-angle, a degenerate smooth wheel (half_angle = 0), or a
/// fixed point too slow to vault.
std::optional<double> rimless_wheel_fixed_point(const RimlessWheelParams& params);

}  // namespace zippy
