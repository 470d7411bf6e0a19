#include "zippy/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "zippy/config.hpp"
#include "zippy/motor.hpp"

namespace zippy {

namespace {

// Continuous coordinates of the smooth phase: hip position, orientation as a
// free quaternion (w x y z), twist, hip angle and rate. Discrete fields
// (mode, reference, stop flags, contact height) are frozen between events.
using Vec15 = Eigen::Matrix<double, 15, 1>;

Vec15 pack(const HybridState& s) {
  Vec15 y;
  y.segment<3>(0) = s.hip_position;
  y[3] = s.orientation.w();
  y[4] = s.orientation.x();
  y[5] = s.orientation.y();
  y[6] = s.orientation.z();
  y.segment<3>(7) = s.linear_velocity;
  y.segment<3>(10) = s.angular_velocity;
  y[13] = s.hip_angle;
  y[14] = s.hip_rate;
  return y;
}

// Writes the continuous coordinates into `s`, normalizing the quaternion so
// downstream rotation math stays orthonormal; the integration variable keeps
// its raw norm.
void unpack(const Vec15& y, HybridState& s) {
  s.hip_position = y.segment<3>(0);
  s.orientation = Quat(y[3], y[4], y[5], y[6]).normalized();
  s.linear_velocity = y.segment<3>(7);
  s.angular_velocity = y.segment<3>(10);
  s.hip_angle = y[13];
  s.hip_rate = y[14];
}

Vec15 rate_of(const HybridState& s, const DynamicsOutput& out) {
  Vec15 dy;
  dy.segment<3>(0) = s.linear_velocity;
  // d/dt Q = 1/2 (omega quaternion-product Q), with omega in the world frame.
  const Quat om(0.0, s.angular_velocity.x(), s.angular_velocity.y(), s.angular_velocity.z());
  const Quat qd = om * s.orientation;
  dy[3] = 0.5 * qd.w();
  dy[4] = 0.5 * qd.x();
  dy[5] = 0.5 * qd.y();
  dy[6] = 0.5 * qd.z();
  dy.segment<3>(7) = out.acceleration.segment<3>(0);
  dy.segment<3>(10) = out.acceleration.segment<3>(3);
  dy[13] = s.hip_rate;
  dy[14] = out.acceleration[6];
  return dy;
}

const char* const kCsvHeader =
    "time,mode,reference,stop_engaged,stop_side,hip_x,hip_y,hip_z,"
    "quat_w,quat_x,quat_y,quat_z,hip_angle,vel_x,vel_y,vel_z,"
    "omega_x,omega_y,omega_z,hip_rate,contact_height,contact_active,"
    "contact_x,contact_y,contact_z,force_x,force_y,force_z,normal_force,"
    "tangential_force,friction_saturated,voltage,current,power";

void append_num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void SimConfig::validate() const {
  if (!(duration > 0.0)) throw ValidationError("sim: duration must be positive");
  if (!(max_step > 0.0)) throw ValidationError("sim: max_step must be positive");
  if (!(time_tolerance > 0.0)) throw ValidationError("sim: time_tolerance must be positive");
  if (!(guard_tolerance > 0.0)) throw ValidationError("sim: guard_tolerance must be positive");
  if (!(record_stride > 0.0)) throw ValidationError("sim: record_stride must be positive");
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Touchdown: return "touchdown";
    case EventKind::Liftoff: return "liftoff";
    case EventKind::HardStop: return "hardstop";
    case EventKind::WaveformEdge: return "waveform-edge";
  }
  return "?";
}

const char* to_string(SimStatus status) {
  switch (status) {
    case SimStatus::Completed: return "completed";
    case SimStatus::Fell: return "fell";
    case SimStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

namespace {

// Guard book-keeping. A guard participates only while armed; it arms once
// its value is clearly positive at a committed state, so a state that starts
// on (or past) a guard surface does not fire until it has genuinely left it.
// Index order is the tie-break priority, highest first.
enum GuardId : int {
  kGuardStopPlus = 0,   // hip angle reaching +phi_max
  kGuardStopMinus = 1,  // hip angle reaching -phi_max
  kGuardStopRelease = 2,
  kGuardTouchLeft = 3,
  kGuardTouchRight = 4,
  kGuardBindLeft = 5,   // submerged foot's transfer impulse turning compressive
  kGuardBindRight = 6,
  kGuardSupportShift = 7,  // terrain height under the rolling contact changed
  kGuardLiftoff = 8,
  kGuardCount = 9
};

// Terrain-height jumps under the contact smaller than this are absorbed by
// the constraint stabilization rather than treated as events.
constexpr double kSupportShiftTol = 1e-7;

struct WalkerSim {
  const Waveform& wave;
  const Terrain& terrain;
  const WalkerParams& params;
  const SimConfig& cfg;

  Trajectory traj;
  HybridState state;
  double t = 0.0;

  std::array<bool, kGuardCount> armed{};
  // Whether each foot has been clearly above the terrain at a committed
  // state of this run. The binding guards only watch penetrations the run
  // saw develop; a foot supplied already interpenetrating (a leaned standing
  // pose buries the hanging foot about a millimetre deep) is left to its own
  // statics and can still bind through an ordinary touchdown once it has
  // risen clear.
  std::array<bool, 2> foot_clear_seen{};
  long edge_index = 1;    // next waveform half-period boundary
  long record_index = 1;  // next uniform sample
  int cascade = 0;
  double last_event_time = -1.0;

  // Stop condition for stride-targeted runs.
  Foot stop_foot = Foot::Left;
  int stop_count = -1;  // <0: run to duration

  WalkerSim(const HybridState& initial, const Waveform& w, const Terrain& terr,
            const WalkerParams& p, const SimConfig& c)
      : wave(w), terrain(terr), params(p), cfg(c), state(initial) {
    state.time = 0.0;
    traj.config = cfg;
    traj.waveform = wave;
  }

  bool in_stance() const { return state.mode != Mode::Flight; }

  bool guard_active(int id) const {
    switch (id) {
      case kGuardStopPlus: return !state.stop_engaged;
      case kGuardStopMinus: return !state.stop_engaged;
      case kGuardStopRelease: return state.stop_engaged;
      case kGuardTouchLeft: return state.mode != Mode::StanceLeft;
      case kGuardTouchRight: return state.mode != Mode::StanceRight;
      // A grazing touchdown leaves a foot below the surface with a tensile
      // transfer impulse. While it stays submerged the binding guard watches
      // that impulse; once it turns compressive the foot can genuinely bear
      // load and the touchdown fires. Arming still requires the impulse to be
      // clearly tensile at a committed state first, so a loaded rolling
      // contact can never chatter between feet.
      case kGuardBindLeft:
        return state.mode != Mode::StanceLeft && foot_clear_seen[0] &&
               touchdown_clearance(state, Foot::Left, params, terrain) < 0.0;
      case kGuardBindRight:
        return state.mode != Mode::StanceRight && foot_clear_seen[1] &&
               touchdown_clearance(state, Foot::Right, params, terrain) < 0.0;
      case kGuardSupportShift: return in_stance();
      case kGuardLiftoff: return in_stance();
    }
    return false;
  }

  // Guard values for a candidate state. `out` must be the dynamics solved at
  // that state when the guard needs constraint forces.
  double guard_value(int id, const HybridState& s, const DynamicsOutput* out) const {
    switch (id) {
      case kGuardStopPlus: return params.hard_stop_angle - s.hip_angle;
      case kGuardStopMinus: return s.hip_angle + params.hard_stop_angle;
      case kGuardStopRelease: return -s.stop_side * out->stop_torque;
      case kGuardTouchLeft: return touchdown_clearance(s, Foot::Left, params, terrain);
      case kGuardTouchRight: return touchdown_clearance(s, Foot::Right, params, terrain);
      case kGuardBindLeft:
        return -touchdown_normal_impulse(s, Foot::Left, params) / params.mass_total;
      case kGuardBindRight:
        return -touchdown_normal_impulse(s, Foot::Right, params) / params.mass_total;
      case kGuardSupportShift: {
        const Vec3 p = foot_support_world(s, stance_foot(s.mode), params);
        return kSupportShiftTol - std::abs(terrain.height(p.x(), p.y()) - s.contact_height);
      }
      case kGuardLiftoff: return out->contact.normal_force;
    }
    return 1.0;
  }

  static bool needs_dynamics(int id) {
    return id == kGuardStopRelease || id == kGuardLiftoff;
  }

  // Drops arming for guards that are no longer applicable and arms any
  // applicable guard that is clearly off its surface.
  void rearm(const HybridState& s, const DynamicsOutput& out) {
    for (int f = 0; f < 2; ++f) {
      const Foot foot = (f == 0) ? Foot::Left : Foot::Right;
      if (!foot_clear_seen[f] &&
          touchdown_clearance(s, foot, params, terrain) > cfg.guard_tolerance) {
        foot_clear_seen[f] = true;
      }
    }
    for (int id = 0; id < kGuardCount; ++id) {
      if (!guard_active(id)) {
        armed[id] = false;
        continue;
      }
      if (!armed[id] && guard_value(id, s, &out) > cfg.guard_tolerance) armed[id] = true;
    }
  }

  double segment_voltage(double a, double b) const {
    return waveform_phase_voltage(wave, waveform_phase(wave, 0.5 * (a + b)));
  }

  // One classic 4th-order step of the smooth dynamics; the voltage is
  // constant because segments never straddle waveform edges.
  Vec15 rk4(const Vec15& y0, double voltage, double h) const {
    HybridState s = state;
    const auto f = [&](const Vec15& y) {
      unpack(y, s);
      return rate_of(s, continuous_dynamics(s, voltage, params));
    };
    const Vec15 k1 = f(y0);
    const Vec15 k2 = f(y0 + 0.5 * h * k1);
    const Vec15 k3 = f(y0 + 0.5 * h * k2);
    const Vec15 k4 = f(y0 + h * k3);
    return y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // Cash-Karp embedded 4(5) pair; returns the 5th-order solution and the
  // max-norm of the embedded error estimate scaled to unit tolerance.
  Vec15 cash_karp(const Vec15& y0, double voltage, double h, double& err) const {
    HybridState s = state;
    const auto f = [&](const Vec15& y) {
      unpack(y, s);
      return rate_of(s, continuous_dynamics(s, voltage, params));
    };
    const Vec15 k1 = f(y0);
    const Vec15 k2 = f(y0 + h * (0.2 * k1));
    const Vec15 k3 = f(y0 + h * (0.075 * k1 + 0.225 * k2));
    const Vec15 k4 = f(y0 + h * (0.3 * k1 - 0.9 * k2 + 1.2 * k3));
    const Vec15 k5 =
        f(y0 + h * ((-11.0 / 54.0) * k1 + 2.5 * k2 - (70.0 / 27.0) * k3 + (35.0 / 27.0) * k4));
    const Vec15 k6 = f(y0 + h * ((1631.0 / 55296.0) * k1 + (175.0 / 512.0) * k2 +
                                 (575.0 / 13824.0) * k3 + (44275.0 / 110592.0) * k4 +
                                 (253.0 / 4096.0) * k5));
    const Vec15 y5 = y0 + h * ((37.0 / 378.0) * k1 + (250.0 / 621.0) * k3 +
                               (125.0 / 594.0) * k4 + (512.0 / 1771.0) * k6);
    const Vec15 y4 = y0 + h * ((2825.0 / 27648.0) * k1 + (18575.0 / 48384.0) * k3 +
                               (13525.0 / 55296.0) * k4 + (277.0 / 14336.0) * k5 + 0.25 * k6);
    constexpr double atol = 1e-12;
    constexpr double rtol = 1e-10;
    err = 0.0;
    for (int i = 0; i < 15; ++i) {
      const double scale = atol + rtol * std::max(std::abs(y5[i]), std::abs(y0[i]));
      err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
    }
    return y5;
  }

  void record_sample(const DynamicsOutput& out) {
    Sample smp;
    smp.time = t;
    smp.state = state;
    smp.contact = out.contact;
    smp.voltage = waveform_voltage(wave, t);
    smp.current = motor_current(params.motor, smp.voltage, state.hip_rate);
    smp.power = smp.voltage * smp.current;
    if (smp.power < -1e-12) traj.regenerative = true;
    traj.samples.push_back(std::move(smp));
  }

  bool fallen() const {
    const double ground = terrain.height(state.hip_position.x(), state.hip_position.y());
    if (state.hip_position.z() - ground < 0.4 * params.hip_height) return true;
    // Tilt beyond 90 degrees: the body up axis points at or below the horizon.
    return (state.orientation * world_up()).z() <= 0.0;
  }

  void fail(const std::string& why) {
    traj.status = SimStatus::NumericalFailure;
    traj.failure_message = why;
  }

  struct Located {
    int id = -1;
    double time = 0.0;
  };

  // Bisects the earliest armed guard crossing inside (t, t_end], where the
  // step from `y_start` over the whole segment produced a negative value for
  // at least one armed guard. Candidate states are re-integrated from the
  // segment start so the located state carries full integrator accuracy.
  Located locate_event(const Vec15& y_start, double voltage, double t_end,
                       const std::array<double, kGuardCount>& g_end) {
    Located best;
    HybridState probe = state;
    for (int id = 0; id < kGuardCount; ++id) {
      if (!armed[id] || !(g_end[id] < 0.0)) continue;
      if (best.id >= 0 && !(best.time > t + cfg.time_tolerance)) break;  // ties resolve by priority
      double lo = t, hi = t_end;
      if (best.id >= 0) hi = std::min(hi, best.time);
      // The guard is non-negative at lo by the arming rule; hunt the sign
      // change in (lo, hi]. If the best-so-far time cuts this bracket short
      // the guard may stay non-negative there, which just means it loses.
      bool bracket = true;
      if (hi < t_end) {
        probe = state;
        unpack(rk4(y_start, voltage, hi - t), probe);
        probe.time = hi;
        DynamicsOutput out;
        if (needs_dynamics(id)) out = continuous_dynamics(probe, voltage, params);
        bracket = guard_value(id, probe, &out) < 0.0;
      }
      while (bracket && hi - lo > cfg.time_tolerance) {
        const double mid = 0.5 * (lo + hi);
        probe = state;
        unpack(rk4(y_start, voltage, mid - t), probe);
        probe.time = mid;
        DynamicsOutput out;
        if (needs_dynamics(id)) out = continuous_dynamics(probe, voltage, params);
        if (guard_value(id, probe, &out) < 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (bracket && (best.id < 0 || hi < best.time - cfg.time_tolerance)) {
        best.id = id;
        best.time = hi;
      }
    }
    return best;
  }

  // Applies the impact/transition for guard `id` to `state` (already moved
  // to the event time) and logs it. May flag a cascade failure or finish a
  // stride-targeted run; the main loop reads both off the members.
  void apply_event(int id) {
    Event ev;
    ev.time = t;
    ev.pre = state;
    switch (id) {
      case kGuardStopPlus:
      case kGuardStopMinus:
        ev.kind = EventKind::HardStop;
        state = impact_hard_stop(state, params);
        break;
      case kGuardStopRelease:
        ev.kind = EventKind::HardStop;
        state.stop_engaged = false;
        state.stop_side = 0;
        break;
      case kGuardTouchLeft:
      case kGuardTouchRight:
      case kGuardBindLeft:
      case kGuardBindRight: {
        ev.kind = EventKind::Touchdown;
        const Foot foot =
            (id == kGuardTouchLeft || id == kGuardBindLeft) ? Foot::Left : Foot::Right;
        state = impact_touchdown(state, foot, params, terrain);
        break;
      }
      case kGuardSupportShift: {
        const Vec3 p = foot_support_world(state, stance_foot(state.mode), params);
        const double ground = terrain.height(p.x(), p.y());
        if (ground < state.contact_height) {
          // The ground fell away under the rolling contact: release it.
          ev.kind = EventKind::Liftoff;
          state.mode = Mode::Flight;
        } else {
          // The contact rolled into a higher patch: re-anchor on it. The
          // same-foot touchdown map resamples the terrain and re-projects.
          ev.kind = EventKind::Touchdown;
          state = impact_touchdown(state, stance_foot(state.mode), params, terrain);
        }
        break;
      }
      case kGuardLiftoff:
        ev.kind = EventKind::Liftoff;
        state.mode = Mode::Flight;
        break;
    }
    state.time = t;
    ev.post = state;
    traj.events.push_back(ev);

    // Firing consumes every arming: a guard participates again only once it
    // has been clearly positive at a committed state. A transition that
    // leaves its own guard at zero (or a tensile graze that changes nothing)
    // therefore cannot re-fire at the same instant.
    armed.fill(false);

    if (t - last_event_time < cfg.time_tolerance) {
      if (++cascade > 32) {
        fail("event cascade: more than 32 transitions at one instant");
        return;
      }
    } else {
      cascade = 0;
    }
    last_event_time = t;

    if (stop_count > 0 && ev.kind == EventKind::Touchdown) {
      const bool arrived = state.mode ==
                           (stop_foot == Foot::Left ? Mode::StanceLeft : Mode::StanceRight);
      const bool was_there =
          ev.pre.mode == state.mode;  // same-foot re-anchor is not a stride
      if (arrived && !was_there) --stop_count;
    }
  }

  void run() {
    state.validate(params);
    if (in_stance()) {
      const Vec3 p = foot_support_world(state, stance_foot(state.mode), params);
      if (std::abs(p.z() - state.contact_height) > 1e-3) {
        throw ValidationError("sim: stance foot is off its contact plane");
      }
    }

    try {
      DynamicsOutput out = continuous_dynamics(state, waveform_voltage(wave, 0.0), params);
      record_sample(out);
      rearm(state, out);

      while (t < cfg.duration && stop_count != 0) {
        // Service boundaries that are due before integrating further, so an
        // event landing exactly on one never plans an empty segment. Due
        // means reached exactly: the planner stops on boundary times, so a
        // step that lands short of one is followed by a remainder step
        // rather than early service (which would mis-stamp the time).
        const double t_edge = static_cast<double>(edge_index) * 0.5 / wave.frequency;
        if (t_edge <= t) {
          Event ev;
          ev.time = t;
          ev.kind = EventKind::WaveformEdge;
          ev.pre = state;
          ev.post = state;
          traj.events.push_back(ev);
          ++edge_index;
          continue;
        }
        const double t_rec = static_cast<double>(record_index) * cfg.record_stride;
        if (t_rec <= t) {
          record_sample(out);
          ++record_index;
          continue;
        }

        const double t_target =
            std::min(std::min(cfg.duration, t + cfg.max_step), std::min(t_edge, t_rec));
        const double voltage = segment_voltage(t, t_target);

        if (cfg.integrator == Integrator::FixedStep4) {
          advance(pack(state), voltage, t_target);
        } else {
          // Error-controlled sub-steps up to the planned boundary; guards
          // are checked on every accepted sub-step. The final sub-step
          // commits the boundary time itself so due-service sees it exactly.
          double h = std::min(cfg.max_step, t_target - t);
          while (t < t_target && traj.status == SimStatus::Completed) {
            double err = 0.0;
            const Vec15 y0 = pack(state);
            const double h_try = std::min(h, t_target - t);
            cash_karp(y0, voltage, h_try, err);
            if (err > 1.0 && h_try > 16.0 * cfg.time_tolerance) {
              h = std::max(0.2 * h_try, 0.9 * h_try * std::pow(err, -0.25));
              continue;
            }
            const double t_next = (h_try >= t_target - t) ? t_target : t + h_try;
            if (!advance(y0, voltage, t_next)) break;
            h = std::min(cfg.max_step,
                         0.9 * h_try * std::pow(std::max(err, 1e-10), -0.2));
          }
        }
        if (traj.status != SimStatus::Completed) break;

        out = continuous_dynamics(state, waveform_voltage(wave, t), params);
        rearm(state, out);

        if (fallen()) {
          traj.status = SimStatus::Fell;
          break;
        }
      }

      // A record landing exactly on the end time is still due when the loop
      // exits; the loop top only services boundaries before integrating.
      while (traj.status == SimStatus::Completed &&
             static_cast<double>(record_index) * cfg.record_stride <= t) {
        record_sample(out);
        ++record_index;
      }
    } catch (const NumericalError& e) {
      fail(e.what());
    }

    traj.end_time = t;
    traj.final_state = state;
    try {
      traj.final_contact =
          continuous_dynamics(state, waveform_voltage(wave, t), params).contact;
    } catch (const NumericalError&) {
      traj.final_contact = ContactInfo{};
    }
  }

  // Integrates one committed piece from the current state to `t_target`,
  // detecting guard crossings; commits either the boundary state (returns
  // true) or the event state with its transition applied (returns false).
  bool advance(const Vec15& y_start, double voltage, double t_target) {
    HybridState end = state;
    unpack(rk4(y_start, voltage, t_target - t), end);
    end.time = t_target;

    std::array<double, kGuardCount> g_end;
    g_end.fill(1.0);
    DynamicsOutput end_dyn;
    bool have_dyn = false;
    bool crossed = false;
    for (int id = 0; id < kGuardCount; ++id) {
      if (!armed[id]) continue;
      if (needs_dynamics(id) && !have_dyn) {
        end_dyn = continuous_dynamics(end, voltage, params);
        have_dyn = true;
      }
      g_end[id] = guard_value(id, end, &end_dyn);
      crossed = crossed || g_end[id] < 0.0;
    }

    if (!crossed) {
      state = end;
      t = t_target;
      return true;
    }

    const Located hit = locate_event(y_start, voltage, t_target, g_end);
    if (hit.id < 0) {
      // The crossing sits closer to the segment start than the time
      // tolerance; treat it as firing immediately.
      int id = 0;
      while (!(armed[id] && g_end[id] < 0.0)) ++id;
      apply_event(id);
      return false;
    }
    unpack(rk4(y_start, voltage, hit.time - t), state);
    t = hit.time;
    apply_event(hit.id);
    return false;
  }
};

}  // namespace

Trajectory simulate(const HybridState& initial, const Waveform& w, const Terrain& terrain,
                    const WalkerParams& params, const SimConfig& cfg) {
  cfg.validate();
  w.validate();
  WalkerSim sim(initial, w, terrain, params, cfg);
  sim.run();
  return std::move(sim.traj);
}

Trajectory simulate_until_touchdown(const HybridState& initial, const Waveform& w,
                                    const Terrain& terrain, const WalkerParams& params,
                                    const SimConfig& cfg, Foot foot, int count) {
  cfg.validate();
  w.validate();
  if (count < 1) throw ValidationError("sim: touchdown count must be at least 1");
  WalkerSim sim(initial, w, terrain, params, cfg);
  sim.stop_foot = foot;
  sim.stop_count = count;
  sim.run();
  return std::move(sim.traj);
}

RimlessRun simulate_rimless(const RimlessWheelParams& wheel, double initial_rate,
                            int max_strides, const SimConfig& cfg) {
  wheel.validate();
  cfg.validate();
  RimlessRun run;
  const double g_over_l = kGravity / wheel.spoke_length;
  const double fwd = wheel.slope + wheel.half_angle;   // transfer angle rolling forward
  const double back = wheel.slope - wheel.half_angle;  // transfer angle rocking back
  const double ratio = rimless_impact_ratio(wheel);

  // theta measured from true vertical; the hub is an inverted pendulum.
  Vec2 x(back, initial_rate);
  double t = 0.0;
  bool armed_fwd = false, armed_back = false;

  const auto f = [&](const Vec2& v) { return Vec2(v[1], g_over_l * std::sin(v[0])); };
  const auto rk4 = [&](const Vec2& v, double h) {
    const Vec2 k1 = f(v);
    const Vec2 k2 = f(v + 0.5 * h * k1);
    const Vec2 k3 = f(v + 0.5 * h * k2);
    const Vec2 k4 = f(v + h * k3);
    return Vec2(v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };

  int strides = 0;
  while (t < cfg.duration && strides < max_strides) {
    if (!armed_fwd && fwd - x[0] > cfg.guard_tolerance) armed_fwd = true;
    if (!armed_back && x[0] - back > cfg.guard_tolerance) armed_back = true;

    const double h = std::min(cfg.max_step, cfg.duration - t);
    const Vec2 x_end = rk4(x, h);

    const bool hit_fwd = armed_fwd && fwd - x_end[0] < 0.0;
    const bool hit_back = armed_back && x_end[0] - back < 0.0;
    if (!hit_fwd && !hit_back) {
      x = x_end;
      t += h;
      continue;
    }

    // Bisect the earlier crossing; both firing in one step cannot happen
    // with a continuous rate, but the guard test keeps the earlier one.
    double lo = 0.0, hi = h;
    const bool forward = hit_fwd;
    while (hi - lo > cfg.time_tolerance) {
      const double mid = 0.5 * (lo + hi);
      const Vec2 xm = rk4(x, mid);
      const bool past = forward ? (fwd - xm[0] < 0.0) : (xm[0] - back < 0.0);
      (past ? hi : lo) = mid;
    }
    const Vec2 x_hit = rk4(x, hi);
    t += hi;

    RimlessRun::Stride s;
    s.time = t;
    s.angle = forward ? fwd : back;
    s.rate_before = x_hit[1];
    s.rate_after = ratio * x_hit[1];
    s.forward = forward;
    run.strides.push_back(s);

    // Support transfers to the adjacent spoke: the stance angle re-measures
    // from the new contact, the rate scales by the impact ratio.
    x[0] = forward ? back : fwd;
    x[1] = s.rate_after;
    armed_fwd = false;
    armed_back = false;
    ++strides;
  }

  run.end_time = t;
  run.final_angle = x[0];
  run.final_rate = x[1];
  return run;
}

std::string Trajectory::samples_csv() const {
  std::string out(kCsvHeader);
  out += '\n';
  for (const Sample& s : samples) {
    append_num(out, s.time);
    out += ',';
    out += to_string(s.state.mode);
    out += ',';
    out += to_string(s.state.reference);
    out += ',';
    out += s.state.stop_engaged ? '1' : '0';
    out += ',';
    out += std::to_string(s.state.stop_side);
    const double nums[] = {s.state.hip_position.x(), s.state.hip_position.y(),
                           s.state.hip_position.z(), s.state.orientation.w(),
                           s.state.orientation.x(), s.state.orientation.y(),
                           s.state.orientation.z(), s.state.hip_angle,
                           s.state.linear_velocity.x(), s.state.linear_velocity.y(),
                           s.state.linear_velocity.z(), s.state.angular_velocity.x(),
                           s.state.angular_velocity.y(), s.state.angular_velocity.z(),
                           s.state.hip_rate, s.state.contact_height};
    for (double v : nums) {
      out += ',';
      append_num(out, v);
    }
    out += ',';
    out += s.contact.active ? '1' : '0';
    const double cnums[] = {s.contact.point.x(), s.contact.point.y(), s.contact.point.z(),
                            s.contact.force.x(), s.contact.force.y(), s.contact.force.z(),
                            s.contact.normal_force, s.contact.tangential_force};
    for (double v : cnums) {
      out += ',';
      append_num(out, v);
    }
    out += ',';
    out += s.contact.friction_saturated ? '1' : '0';
    const double mnums[] = {s.voltage, s.current, s.power};
    for (double v : mnums) {
      out += ',';
      append_num(out, v);
    }
    out += '\n';
  }
  return out;
}

std::string Trajectory::metadata_json(const std::string& config_text) const {
  nlohmann::json j;
  j["status"] = to_string(status);
  j["end_time"] = end_time;
  j["regenerative"] = regenerative;
  if (!failure_message.empty()) j["failure"] = failure_message;
  j["config"] = {{"duration", config.duration},
                 {"max_step", config.max_step},
                 {"time_tolerance", config.time_tolerance},
                 {"guard_tolerance", config.guard_tolerance},
                 {"integrator", config.integrator == Integrator::FixedStep4
                                    ? "fixed-step-4"
                                    : "adaptive-embedded"},
                 {"record_stride", config.record_stride},
                 {"rng_seed", config.rng_seed}};
  j["waveform"] = {{"amplitude", waveform.amplitude},
                   {"frequency", waveform.frequency},
                   {"offset", waveform.offset}};
  if (!config_text.empty()) j["config_hash"] = content_hash(config_text);

  nlohmann::json evs = nlohmann::json::array();
  const auto brief = [](const HybridState& s) {
    return nlohmann::json{{"mode", to_string(s.mode)},
                          {"hip_angle", s.hip_angle},
                          {"hip_rate", s.hip_rate},
                          {"stop_engaged", s.stop_engaged},
                          {"hip_z", s.hip_position.z()}};
  };
  for (const Event& e : events) {
    evs.push_back({{"time", e.time},
                   {"kind", to_string(e.kind)},
                   {"pre", brief(e.pre)},
                   {"post", brief(e.post)}});
  }
  j["events"] = std::move(evs);
  j["sample_count"] = samples.size();
  return j.dump(2);
}

}  // namespace zippy
