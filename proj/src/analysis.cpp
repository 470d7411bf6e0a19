#include "zippy/analysis.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace zippy {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegPerRad = 180.0 / kPi;

// First sample index of the steady-state window: the opening fifth of the
// run is treated as startup transient and discarded.
size_t steady_start(const std::vector<Sample>& samples) {
  if (samples.size() < 2) throw ValidationError("metric needs at least two samples");
  const double t0 = samples.front().time;
  const double cutoff = t0 + 0.2 * (samples.back().time - t0);
  size_t i = 0;
  while (i < samples.size() && samples[i].time < cutoff) ++i;
  if (samples.size() - i < 2) {
    throw ValidationError("trajectory is shorter than the steady-state window");
  }
  return i;
}

bool is_engagement(const Event& e) {
  return e.kind == EventKind::HardStop && !e.pre.stop_engaged && e.post.stop_engaged;
}

bool is_transfer(const Event& e) {
  return e.kind == EventKind::Touchdown && e.pre.mode != e.post.mode;
}

}  // namespace

Vec3 attitude_angles(const Quat& q) {
  const Mat3 r = q.normalized().toRotationMatrix();
  const double pitch = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return Vec3(roll, pitch, yaw);
}

double mean_speed(const Trajectory& traj) {
  if (traj.samples.size() < 2) throw ValidationError("mean speed needs at least two samples");
  const Sample& a = traj.samples.front();
  const Sample& b = traj.samples.back();
  const double elapsed = b.time - a.time;
  if (elapsed <= 0.0) throw ValidationError("mean speed needs positive elapsed time");
  return (b.state.hip_position.head<2>() - a.state.hip_position.head<2>()).norm() / elapsed;
}

std::pair<double, double> attitude_amplitudes(const Trajectory& traj) {
  const size_t start = steady_start(traj.samples);
  double roll_min = 0.0, roll_max = 0.0, pitch_min = 0.0, pitch_max = 0.0;
  bool first = true;
  for (size_t i = start; i < traj.samples.size(); ++i) {
    const Vec3 ang = attitude_angles(traj.samples[i].state.orientation);
    if (first) {
      roll_min = roll_max = ang.x();
      pitch_min = pitch_max = ang.y();
      first = false;
    } else {
      roll_min = std::min(roll_min, ang.x());
      roll_max = std::max(roll_max, ang.x());
      pitch_min = std::min(pitch_min, ang.y());
      pitch_max = std::max(pitch_max, ang.y());
    }
  }
  return {0.5 * (roll_max - roll_min) * kDegPerRad, 0.5 * (pitch_max - pitch_min) * kDegPerRad};
}

double compute_cot(const Trajectory& traj, const WalkerParams& params) {
  const size_t start = steady_start(traj.samples);
  const Sample& a = traj.samples[start];
  const Sample& b = traj.samples.back();
  const double elapsed = b.time - a.time;
  const double displacement =
      (b.state.hip_position.head<2>() - a.state.hip_position.head<2>()).norm();
  if (displacement <= 0.0) {
    throw ValidationError("cost of transport is undefined without net displacement");
  }
  double energy = 0.0;
  for (size_t i = start + 1; i < traj.samples.size(); ++i) {
    const Sample& p = traj.samples[i - 1];
    const Sample& q = traj.samples[i];
    energy += 0.5 * (p.power + q.power) * (q.time - p.time);
  }
  const double mean_power = energy / elapsed;
  const double speed = displacement / elapsed;
  return mean_power / (params.mass_total * kGravity * speed);
}

double aerial_fraction(const Trajectory& traj) {
  if (traj.samples.size() < 2) return 0.0;
  double airborne = 0.0;
  for (size_t i = 1; i < traj.samples.size(); ++i) {
    if (traj.samples[i - 1].state.mode == Mode::Flight) {
      airborne += traj.samples[i].time - traj.samples[i - 1].time;
    }
  }
  return airborne / (traj.samples.back().time - traj.samples.front().time);
}

std::optional<double> hardstop_phase(const Trajectory& traj) {
  // Phase is measured within the full waveform period (two half-period
  // edges per period), so an engagement exactly at the mid-period polarity
  // flip reads 0.5.
  const double f = traj.waveform.frequency;
  double sum = 0.0;
  int count = 0;
  for (const Event& e : traj.events) {
    if (!is_engagement(e)) continue;
    double phase = std::fmod(e.time * f, 1.0);
    if (phase < 0.0) phase += 1.0;
    sum += phase;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

double stride_frequency(const Trajectory& traj) {
  if (traj.samples.size() < 2) return 0.0;
  const double elapsed = traj.samples.back().time - traj.samples.front().time;
  if (elapsed <= 0.0) return 0.0;
  int transfers = 0;
  for (const Event& e : traj.events) transfers += is_transfer(e) ? 1 : 0;
  return 0.5 * static_cast<double>(transfers) / elapsed;
}

GaitMetrics compute_metrics(const Trajectory& traj, const WalkerParams& params) {
  GaitMetrics m;
  m.fell = traj.status == SimStatus::Fell;
  if (traj.samples.size() < 2) return m;

  m.mean_speed = mean_speed(traj);
  m.speed_in_leg_lengths = m.mean_speed / params.hip_height;
  m.stride_frequency = stride_frequency(traj);
  m.aerial_fraction = aerial_fraction(traj);

  try {
    const auto [roll, pitch] = attitude_amplitudes(traj);
    m.roll_amplitude = roll;
    m.pitch_amplitude = pitch;
  } catch (const ValidationError&) {
    // Run too short for a steady window; amplitudes stay zero.
  }
  try {
    m.cot = compute_cot(traj, params);
  } catch (const ValidationError&) {
    // No net displacement; transport cost is undefined and reported as zero.
  }

  // A turning radius is reported only when the steady-state path is
  // genuinely circular: enough samples, a clean fit, and curvature within
  // plausible bounds (a near-straight path fits a gigantic circle).
  try {
    const size_t start = steady_start(traj.samples);
    std::vector<Vec2> path;
    path.reserve(traj.samples.size() - start);
    for (size_t i = start; i < traj.samples.size(); ++i) {
      path.push_back(traj.samples[i].state.hip_position.head<2>());
    }
    if (path.size() >= 8) {
      const CircleFit fit = fit_circle(path);
      if (std::isfinite(fit.radius) && fit.radius < 50.0 &&
          fit.rms_residual < 0.05 * fit.radius) {
        m.turn_radius = fit.radius;
      }
    }
  } catch (const ValidationError&) {
    // Degenerate path; no radius.
  }
  return m;
}

CircleFit fit_circle(const std::vector<Vec2>& points) {
  if (points.size() < 3) throw ValidationError("circle fit needs at least three points");

  MatX a(points.size(), 3);
  VecX b(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec2& p = points[i];
    a.row(static_cast<Eigen::Index>(i)) << p.x(), p.y(), 1.0;
    b[static_cast<Eigen::Index>(i)] = -(p.x() * p.x() + p.y() * p.y());
  }

  Eigen::ColPivHouseholderQR<MatX> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw ValidationError("circle fit is degenerate: points are collinear");
  const Vec3 def = qr.solve(b);

  CircleFit fit;
  fit.center = Vec2(-0.5 * def[0], -0.5 * def[1]);
  const double r2 = fit.center.squaredNorm() - def[2];
  if (!(r2 > 0.0) || !std::isfinite(r2)) {
    throw ValidationError("circle fit is degenerate: no positive radius");
  }
  fit.radius = std::sqrt(r2);

  double ss = 0.0;
  for (const Vec2& p : points) {
    const double d = (p - fit.center).norm() - fit.radius;
    ss += d * d;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(points.size()));
  return fit;
}

// --- periodic gait solvers ---------------------------------------------------

namespace {

// Reduced coordinates for the period map: planar position and heading are
// symmetries of flat-ground walking, so the map is taken with the hip over
// the origin and zero yaw. 11 entries:
// [hip z, roll, pitch, hip angle, v(3), omega(3), hip rate].
using Vec11 = Eigen::Matrix<double, 11, 1>;

struct Chart {
  Mode mode = Mode::StanceLeft;
  Foot reference = Foot::Left;
  bool stop_engaged = false;
  int stop_side = 0;
  double contact_height = 0.0;
};

Chart chart_of(const HybridState& s) {
  return {s.mode, s.reference, s.stop_engaged, s.stop_side, s.contact_height};
}

bool same_chart(const Chart& a, const Chart& b) {
  return a.mode == b.mode && a.reference == b.reference && a.stop_engaged == b.stop_engaged &&
         a.stop_side == b.stop_side;
}

Vec11 reduce(const HybridState& s) {
  const Vec3 ang = attitude_angles(s.orientation);
  const Quat unyaw(Eigen::AngleAxisd(-ang.z(), Vec3::UnitZ()));
  Vec11 u;
  u[0] = s.hip_position.z();
  u[1] = ang.x();
  u[2] = ang.y();
  u[3] = s.hip_angle;
  u.segment<3>(4) = unyaw * s.linear_velocity;
  u.segment<3>(7) = unyaw * s.angular_velocity;
  u[10] = s.hip_rate;
  return u;
}

HybridState unreduce(const Vec11& u, const Chart& chart) {
  HybridState s;
  s.mode = chart.mode;
  s.reference = chart.reference;
  s.stop_engaged = chart.stop_engaged;
  s.stop_side = chart.stop_side;
  s.contact_height = chart.contact_height;
  s.hip_position = Vec3(0.0, 0.0, u[0]);
  s.orientation = Quat(Eigen::AngleAxisd(u[2], Vec3::UnitY()) *
                       Eigen::AngleAxisd(u[1], Vec3::UnitX()));
  s.hip_angle = u[3];
  s.linear_velocity = u.segment<3>(4);
  s.angular_velocity = u.segment<3>(7);
  s.hip_rate = u[10];
  s.time = 0.0;
  return s;
}

std::string residual_history(const std::vector<double>& residuals) {
  std::string out;
  char buf[32];
  for (double r : residuals) {
    std::snprintf(buf, sizeof buf, " %.3e", r);
    out += buf;
  }
  return out;
}

}  // namespace

LimitCycle find_limit_cycle(const WalkerParams& params, const Waveform& w,
                            const Terrain& terrain, const HybridState& guess) {
  params.validate();
  w.validate();
  // The symmetry reduction assumes the ground looks the same everywhere.
  if (std::abs(terrain.height(0.0, 0.0) - terrain.height(1.7, -0.9)) > 1e-12 ||
      std::abs(terrain.height(0.0, 0.0) - terrain.height(-3.1, 2.3)) > 1e-12) {
    throw ValidationError("limit cycle search requires flat terrain");
  }

  SimConfig cfg;
  cfg.max_step = 1e-4;

  const auto flow = [&](const HybridState& from, double periods) {
    cfg.duration = periods / w.frequency;
    cfg.record_stride = cfg.duration;
    const Trajectory traj = simulate(from, w, terrain, params, cfg);
    if (traj.status != SimStatus::Completed) {
      throw NumericalError(std::string("period map left the basin: ") +
                           to_string(traj.status));
    }
    return traj.final_state;
  };

  std::vector<double> residuals;
  const auto solve_with_period = [&](double periods, LimitCycle& out) -> bool {
    // Relax a few periods first so the chart (mode and stop flags at the
    // stroboscopic instant) settles before Newton sharpens the state.
    HybridState x = guess;
    for (int k = 0; k < 5; ++k) x = flow(x, periods);
    const Chart chart = chart_of(x);

    const auto period_map = [&](const Vec11& u) {
      const HybridState end = flow(unreduce(u, chart), periods);
      if (!same_chart(chart_of(end), chart)) {
        throw NumericalError("period map crossed a mode boundary near the cycle");
      }
      return Vec11(reduce(end));
    };

    Vec11 u = reduce(x);
    Eigen::Matrix<double, 11, 11> jac;
    for (int iter = 1; iter <= 15; ++iter) {
      const Vec11 fu = period_map(u);
      const Vec11 r = fu - u;
      const double rn = r.cwiseAbs().maxCoeff();
      residuals.push_back(rn);
      if (rn < 1e-10) {
        // Converged: refresh the Jacobian at the fixed point for the
        // stability verdict.
        for (int j = 0; j < 11; ++j) {
          const double h = 1e-7 * std::max(1.0, std::abs(u[j]));
          Vec11 up = u;
          up[j] += h;
          jac.col(j) = (period_map(up) - fu) / h;
        }
        const Eigen::EigenSolver<Eigen::Matrix<double, 11, 11>> eig(jac);
        out.floquet_magnitudes.resize(11);
        for (int j = 0; j < 11; ++j) out.floquet_magnitudes[j] = std::abs(eig.eigenvalues()[j]);
        std::sort(out.floquet_magnitudes.begin(), out.floquet_magnitudes.end(),
                  std::greater<double>());
        out.stable = out.floquet_magnitudes.front() < 1.0;
        out.period = periods / w.frequency;
        out.residual = rn;
        out.iterations = iter;

        // Report the orbit at the section: the state just after the next
        // genuine left-foot touchdown, or the fixed point itself for an
        // orbit that never touches down (a standing equilibrium).
        SimConfig scfg;
        scfg.duration = 2.5 * periods / w.frequency;
        const HybridState fixed_point = unreduce(u, chart);
        const Trajectory to_section = simulate_until_touchdown(
            fixed_point, w, terrain, params, scfg, Foot::Left);
        out.state = fixed_point;
        for (const Event& e : to_section.events) {
          if (e.kind == EventKind::Touchdown && e.post.mode == Mode::StanceLeft &&
              e.pre.mode != Mode::StanceLeft) {
            out.state = e.post;
            break;
          }
        }
        return true;
      }

      for (int j = 0; j < 11; ++j) {
        const double h = 1e-7 * std::max(1.0, std::abs(u[j]));
        Vec11 up = u;
        up[j] += h;
        jac.col(j) = (period_map(up) - fu) / h;
      }
      const Eigen::Matrix<double, 11, 11> shifted =
          jac - Eigen::Matrix<double, 11, 11>::Identity();
      const Vec11 step = shifted.fullPivLu().solve(-r);
      if (!step.allFinite()) throw NumericalError("period map Jacobian is singular");
      u += step;
    }
    return false;
  };

  LimitCycle cycle;
  try {
    if (solve_with_period(1.0, cycle)) return cycle;
  } catch (const NumericalError&) {
    // Fall through to the period-two attempt.
  }
  if (solve_with_period(2.0, cycle)) return cycle;
  throw NumericalError("limit cycle search did not converge; residuals:" +
                       residual_history(residuals));
}

RimlessCycle find_rimless_cycle(const RimlessWheelParams& wheel, double guess_rate) {
  SimConfig cfg;
  cfg.duration = 30.0;

  const auto map = [&](double rate) {
    const RimlessRun run = simulate_rimless(wheel, rate, 1, cfg);
    if (run.strides.empty() || !run.strides[0].forward) {
      throw NumericalError("rimless rate map: the wheel failed to vault");
    }
    return run.strides[0].rate_after;
  };

  std::vector<double> residuals;
  double rate = guess_rate;
  RimlessCycle out;
  for (int iter = 1; iter <= 20; ++iter) {
    const double r = map(rate) - rate;
    residuals.push_back(std::abs(r));
    const double h = 1e-6 * std::max(1.0, std::abs(rate));
    const double derivative = (map(rate + h) - map(rate - h)) / (2.0 * h);
    if (std::abs(r) < 1e-10) {
      out.rate = rate;
      out.floquet = std::abs(derivative);
      out.stable = out.floquet < 1.0;
      out.residual = std::abs(r);
      out.iterations = iter;
      const RimlessRun run = simulate_rimless(wheel, rate, 1, cfg);
      out.period = run.strides[0].time;
      return out;
    }
    const double slope = derivative - 1.0;
    if (std::abs(slope) < 1e-14) throw NumericalError("rimless rate map is tangent");
    rate -= r / slope;
  }
  throw NumericalError("rimless cycle search did not converge; residuals:" +
                       residual_history(residuals));
}

}  // namespace zippy
