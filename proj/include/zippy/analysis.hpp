#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "zippy/rimless.hpp"
#include "zippy/sim.hpp"

namespace zippy {

/// Summary statistics of one simulated run. Angles are in degrees; speeds
/// in m/s unless stated otherwise.
struct GaitMetrics {
  double mean_speed = 0.0;            // net XY displacement over elapsed time
  double speed_in_leg_lengths = 0.0;  // mean_speed / hip height, 1/s
  double stride_frequency = 0.0;      // full left+right cycles per second
  double roll_amplitude = 0.0;        // deg, half peak-to-peak, steady window
  double pitch_amplitude = 0.0;       // deg
  double cot = 0.0;                   // electrical cost of transport
  double aerial_fraction = 0.0;       // share of elapsed time airborne
  std::optional<double> turn_radius;  // m, absent for straight or erratic paths
  bool fell = false;
};

/// Intrinsic yaw-pitch-roll decomposition of a world-frame attitude:
/// q = Rz(yaw) * Ry(pitch) * Rx(roll). Returns (roll, pitch, yaw) in
/// radians; well-conditioned away from pitch = +/-90 deg.
Vec3 attitude_angles(const Quat& q);

/// Net XY displacement magnitude divided by elapsed time over the whole
/// trajectory. Requires at least two samples.
double mean_speed(const Trajectory& traj);

/// Half peak-to-peak body roll and pitch in degrees over the steady-state
/// window (the first fifth of the run is discarded as transient). Requires
/// at least two samples inside the window.
std::pair<double, double> attitude_amplitudes(const Trajectory& traj);

/// Electrical cost of transport: time-averaged recorded power divided by
/// weight times net-displacement speed, both taken over the steady-state
/// window. Throws ValidationError when the net displacement is zero, where
/// the measure is undefined.
double compute_cot(const Trajectory& traj, const WalkerParams& params);

/// Share of elapsed time spent in flight, accumulated over the uniform
/// sample grid (each interval attributed to the mode at its start).
double aerial_fraction(const Trajectory& traj);

/// Mean phase of hard-stop engagements within the full waveform period,
/// in [0, 1). Disengagements are not counted. Empty when the run produced
/// no engagements.
std::optional<double> hardstop_phase(const Trajectory& traj);

/// Full left+right gait cycles per second: genuine support transfers
/// (touchdowns that change the stance foot) divided by two, per elapsed
/// second.
double stride_frequency(const Trajectory& traj);

/// All of the above in one record.
GaitMetrics compute_metrics(const Trajectory& traj, const WalkerParams& params);

// --- turning-circle fit ------------------------------------------------------

struct CircleFit {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double rms_residual = 0.0;  // RMS of point-to-circle distances
};

/// Algebraic least-squares circle through the points: the linear system
/// minimizing sum (x^2 + y^2 + D x + E y + F)^2, solved in closed form.
/// Throws ValidationError for fewer than three points or a collinear set.
CircleFit fit_circle(const std::vector<Vec2>& points);

// --- periodic gait solvers ---------------------------------------------------

/// A periodic orbit of the driven walker and its local stability.
struct LimitCycle {
  HybridState state;     // on the section: just after a left-foot touchdown
                         // (the orbit's phase-zero state when it never touches down)
  double period = 0.0;   // s, one or two waveform periods
  std::vector<double> floquet_magnitudes;  // sorted descending
  bool stable = false;   // all magnitudes below one
  double residual = 0.0; // return-map mismatch at the fixed point
  int iterations = 0;
};

/// Newton shooting on the period map of the driven walker over flat ground.
/// The map is taken in planar-symmetry-reduced coordinates (hip XY and
/// heading quotiented out), so rigid translations and yaw do not appear as
/// neutral multipliers. The guess is first relaxed forward a few periods,
/// then polished; throws NumericalError with the residual history when the
/// iteration budget runs out.
LimitCycle find_limit_cycle(const WalkerParams& params, const Waveform& w,
                            const Terrain& terrain, const HybridState& guess);

/// One-dimensional analogue for the spoked wheel: fixed point of the
/// post-transfer rate map, its stride period, and the single Floquet
/// magnitude from a centered difference of the map.
struct RimlessCycle {
  double rate = 0.0;      // post-transfer rate at the fixed point, rad/s
  double period = 0.0;    // s per stride
  double floquet = 0.0;
  bool stable = false;
  double residual = 0.0;
  int iterations = 0;
};

RimlessCycle find_rimless_cycle(const RimlessWheelParams& wheel, double guess_rate);

}  // namespace zippy
