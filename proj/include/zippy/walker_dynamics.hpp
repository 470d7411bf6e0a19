#pragma once

#include "zippy/rules.hpp"
#include "zippy/state.hpp"
#include "zippy/terrain.hpp"

namespace zippy {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

/// Stabilization feedback on the acceleration-level constraints (rolling
/// contact and engaged hard stop): each constraint row is driven by
/// -position*err - velocity*err_rate instead of zero, so drift accumulated
/// by the integrator decays instead of growing.
struct StabilizationGains {
  double position = 100.0;  // 1/s^2
  double velocity = 20.0;   // 1/s
};

struct DynamicsOutput {
  // Generalized acceleration: d/dt (hip velocity, reference body angular
  // velocity, hip rate).
  Vec7 acceleration = Vec7::Zero();
  ContactInfo contact;
  double stop_torque = 0.0;   // generalized torque from the engaged stop
  double motor_torque = 0.0;  // applied at the joint this instant
};

/// Right-hand side of the smooth dynamics in the current mode. Stance modes
/// enforce rolling of the reference foot on the horizontal support plane
/// state.contact_height; an engaged hard stop adds a joint-lock row. Solves
/// the constrained Newton-Euler system for the two-body assembly in minimal
/// coordinates; throws NumericalError if the saddle system is singular or
/// the state is not finite.
DynamicsOutput continuous_dynamics(const HybridState& state, double voltage,
                                   const WalkerParams& params,
                                   const StabilizationGains& gains = {});

// --- observables -----------------------------------------------------------

/// World-frame rigid-body data for one body of the assembly.
struct BodyKinematics {
  Mat3 rotation = Mat3::Identity();
  Vec3 com = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
};

BodyKinematics body_kinematics(const HybridState& state, const WalkerParams& params, Foot foot);

double kinetic_energy(const HybridState& state, const WalkerParams& params);
double potential_energy(const HybridState& state, const WalkerParams& params);  // datum z = 0
double total_energy(const HybridState& state, const WalkerParams& params);

Vec3 linear_momentum(const HybridState& state, const WalkerParams& params);
Vec3 angular_momentum_about(const HybridState& state, const WalkerParams& params,
                            const Vec3& point);

/// Combined center of mass, world frame.
Vec3 center_of_mass(const HybridState& state, const WalkerParams& params);

/// Lowest point of a foot ellipsoid against a horizontal plane, world frame.
Vec3 foot_support_world(const HybridState& state, Foot foot, const WalkerParams& params);

// --- event guard functions --------------------------------------------------

/// Height of the foot's support point above the terrain (negative when
/// penetrating). Touchdown is this guard crossing zero from above.
double touchdown_clearance(const HybridState& state, Foot foot, const WalkerParams& params,
                           const Terrain& terrain);

/// Joint-range margin hard_stop_angle - |hip_angle|; the stop impact is this
/// guard crossing zero from above.
double hardstop_clearance(const HybridState& state, const WalkerParams& params);

/// Normal impulse the plastic support transfer onto `foot` would require at
/// this state, with the same engaged-stop handling as the touchdown map.
/// Positive is compressive (the ground pushing up); negative means the
/// contact could only form by pulling, so a touchdown at this instant
/// grazes. A foot left below the surface by a graze binds when this crosses
/// zero from below.
double touchdown_normal_impulse(const HybridState& state, Foot foot,
                                const WalkerParams& params);

// --- impact maps -------------------------------------------------------------

/// Instantaneous support transfer onto `foot`. Re-expresses the state with
/// `foot` as reference, then applies the perfectly plastic contact impulse
/// (with the joint-lock row when the stop is engaged). If the required
/// normal impulse is tensile the touchdown does not bind and the state is
/// returned unchanged: a flight graze stays ballistic, a stance graze keeps
/// its existing contact. Never increases kinetic energy; idempotent once the
/// foot rolls without slip.
HybridState impact_touchdown(const HybridState& state, Foot foot, const WalkerParams& params,
                             const Terrain& terrain);

/// Impulsive stop of the joint at +/-hard_stop_angle with the configured
/// restitution (0 = plastic, which also engages the persistent lock). In
/// stance the contact impulse rows are solved simultaneously; if that would
/// require a tensile contact impulse the foot leaves the ground instead.
HybridState impact_hard_stop(const HybridState& state, const WalkerParams& params);

// --- pose construction --------------------------------------------------------

/// Static equilibrium on flat ground at z = 0: the lean (about both
/// horizontal axes) and hip angle at which the combined center of mass sits
/// exactly above the stance contact point, found by Newton iteration on the
/// unconstrained accelerations. Zero velocity. If the free joint would have
/// to pass the hard stop to balance, the pose rests against the stop instead
/// (lock engaged, stop torque pushing inward). The swing foot of the leaning
/// pose may sit fractionally below the plane; it carries no contact. Throws
/// NumericalError if no balanced pose exists.
HybridState standing_pose(const WalkerParams& params, Foot stance = Foot::Left);

/// Rigid placement of a pose: yaw by `heading` about the vertical through
/// the hip, then translate so the hip is over (x, y) with the stance foot
/// touching the terrain there.
HybridState place_at(const HybridState& pose, const WalkerParams& params, double x, double y,
                     double heading, const Terrain& terrain);

}  // namespace zippy
