#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zippy/rimless.hpp"
#include "zippy/state.hpp"
#include "zippy/terrain.hpp"
#include "zippy/types.hpp"
#include "zippy/walker_dynamics.hpp"
#include "zippy/waveform.hpp"

namespace zippy {

enum class Integrator {
  FixedStep4,        // classic 4th-order steps of at most max_step
  AdaptiveEmbedded,  // embedded 4(5) pair, error-controlled, capped at max_step
};

struct SimConfig {
  double duration = 5.0;      // s
  double max_step = 1e-4;     // s
  double time_tolerance = 1e-12;   // s, bisection window for event times
  double guard_tolerance = 1e-10;  // guard units, dead band around zero
  Integrator integrator = Integrator::FixedStep4;
  double record_stride = 1e-3;  // s between trajectory samples
  std::uint64_t rng_seed = 0;   // echoed into outputs; the integrator itself is deterministic

  void validate() const;
};

enum class EventKind { Touchdown, Liftoff, HardStop, WaveformEdge };
const char* to_string(EventKind kind);

enum class SimStatus { Completed, Fell, NumericalFailure };
const char* to_string(SimStatus status);

struct Sample {
  double time = 0.0;
  HybridState state;
  ContactInfo contact;
  double voltage = 0.0;  // V applied to the motor
  double current = 0.0;  // A
  double power = 0.0;    // W, electrical; negative while regenerating
};

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Touchdown;
  HybridState pre;
  HybridState post;
};

struct Trajectory {
  std::vector<Sample> samples;  // uniform at record_stride, starting at t = 0
  std::vector<Event> events;
  SimStatus status = SimStatus::Completed;
  double end_time = 0.0;
  HybridState final_state;     // last committed state regardless of stride alignment
  ContactInfo final_contact;
  std::string failure_message;  // set only for NumericalFailure
  bool regenerative = false;    // any sample drew negative electrical power
  SimConfig config;
  Waveform waveform;

  /// One row per sample; stable column order documented in the header row.
  std::string samples_csv() const;
  /// Events, terminal status, config echo, and a content hash of the
  /// configuration text for provenance.
  std::string metadata_json(const std::string& config_text = "") const;
};

/// Event-driven hybrid integration: advances the smooth dynamics with steps
/// that never straddle waveform edges or record times, locates guard
/// crossings by bisection, applies the matching impact map, and classifies
/// the run as completed, fallen, or numerically failed.
Trajectory simulate(const HybridState& initial, const Waveform& w, const Terrain& terrain,
                    const WalkerParams& params, const SimConfig& cfg);

/// Same machinery, stopping after `count` genuine touchdowns of `foot`
/// (support transfers onto it, not same-foot contact re-anchoring).
/// cfg.duration still caps the run.
Trajectory simulate_until_touchdown(const HybridState& initial, const Waveform& w,
                                    const Terrain& terrain, const WalkerParams& params,
                                    const SimConfig& cfg, Foot foot, int count = 1);

/// Planar spoked-wheel run through the same step-and-bisect integrator core,
/// used as an end-to-end oracle for the event handling: the closed-form
/// stride map predicts every transfer.
struct RimlessRun {
  struct Stride {
    double time = 0.0;         // transfer instant
    double angle = 0.0;        // stance angle at transfer, from true vertical
    double rate_before = 0.0;  // rad/s just before the transfer
    double rate_after = 0.0;   // rad/s just after
    bool forward = true;       // false when the wheel rocked back instead
  };
  std::vector<Stride> strides;
  SimStatus status = SimStatus::Completed;
  double end_time = 0.0;
  double final_angle = 0.0;
  double final_rate = 0.0;
};

/// Starts at the beginning of a stride (stance angle slope - half_angle)
/// with the given rate and runs until `max_strides` transfers or
/// cfg.duration elapses.
RimlessRun simulate_rimless(const RimlessWheelParams& wheel, double initial_rate,
                            int max_strides, const SimConfig& cfg);

}  // namespace zippy
