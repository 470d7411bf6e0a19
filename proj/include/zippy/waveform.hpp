#pragma once

#include <cmath>

#include "zippy/types.hpp"

namespace zippy {

/// Open-loop square-wave hip drive: +amplitude + offset for the first half
/// of every period, -amplitude + offset for the second half. The boundary
/// sample at exactly half period belongs to the second half.
struct Waveform {
  double amplitude = 3.2;  // V
  double frequency = 3.7;  // Hz
  double offset = 0.0;     // V, DC bias steering the walker

  void validate() const {
    if (!(frequency > 0.0)) throw ValidationError("waveform: frequency must be positive");
    if (amplitude < 0.0) throw ValidationError("waveform: amplitude must be non-negative");
  }
};

/// Voltage as a function of phase in [0, 1), the fraction of the period
/// elapsed. Branching on phase keeps the waveform bit-exact: no floating
/// remainder is involved.
inline double waveform_phase_voltage(const Waveform& w, double phase) {
  return phase < 0.5 ? w.amplitude + w.offset : -w.amplitude + w.offset;
}

/// Folds absolute time onto [0, 1) phase. Large times lose no branch
/// correctness: only the phase value itself carries rounding.
inline double waveform_phase(const Waveform& w, double t) {
  const double cycles = t * w.frequency;
  double phase = cycles - std::floor(cycles);
  if (phase >= 1.0) phase = 0.0;  // guards against floor rounding at representable boundaries
  return phase;
}

/// Voltage at absolute time t (seconds from the start of the drive).
inline double waveform_voltage(const Waveform& w, double t) {
  return waveform_phase_voltage(w, waveform_phase(w, t));
}

/// Clamps a commanded voltage to the H-bridge rails [-max_voltage, +max_voltage].
inline double clamp_to_hbridge(double voltage, double max_voltage) {
  if (voltage > max_voltage) return max_voltage;
  if (voltage < -max_voltage) return -max_voltage;
  return voltage;
}

/// Time of the first half-period edge strictly after t. Edges sit at
/// k / (2 f); computed from the integer edge index so accumulated rounding
/// cannot skip or duplicate edges.
inline double next_waveform_edge(const Waveform& w, double t) {
  const double half = 0.5 / w.frequency;
  double k = std::floor(t / half) + 1.0;
  while (k * half <= t) k += 1.0;  // floor rounding guard
  return k * half;
}

}  // namespace zippy
