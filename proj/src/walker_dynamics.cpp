#include "zippy/walker_dynamics.hpp"

#include <Eigen/LU>
#include <cmath>
#include <cstdio>
#include <optional>

#include "zippy/geometry.hpp"
#include "zippy/motor.hpp"

namespace zippy {

namespace {

using Mat37 = Eigen::Matrix<double, 3, 7>;
// Constraint blocks: at most 3 contact rows + 1 joint-lock row.
using MatC = Eigen::Matrix<double, Eigen::Dynamic, 7, 0, 4, 7>;
using VecC = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using MatK = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 11, 11>;
using VecK = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 11, 1>;

Vec7 pack_velocity(const HybridState& s) {
  Vec7 u;
  u.head<3>() = s.linear_velocity;
  u.segment<3>(3) = s.angular_velocity;
  u[6] = s.hip_rate;
  return u;
}

void unpack_velocity(const Vec7& u, HybridState& s) {
  s.linear_velocity = u.head<3>();
  s.angular_velocity = u.segment<3>(3);
  s.hip_rate = u[6];
}

/// Everything about the two-body assembly needed to form the equations of
/// motion at the current state. Velocities and Jacobians map the minimal
/// coordinates u = (hip velocity, reference angular velocity, hip rate).
struct Assembly {
  double sigma = 1.0;  // +1 when the reference body is the left one
  Mat3 R_ref = Mat3::Identity();
  Vec3 axis = Vec3::Zero();  // hip axis, world
  Mat7 M = Mat7::Zero();
  Vec7 force = Vec7::Zero();  // gravity + velocity products + motor
};

Assembly assemble(const HybridState& s, const WalkerParams& p, double motor_tau) {
  Assembly out;
  const Foot ref = s.reference;
  const Foot oth = other_foot(ref);
  out.sigma = (ref == Foot::Left) ? 1.0 : -1.0;
  out.R_ref = s.orientation.toRotationMatrix();
  const Mat3 R_oth = s.body_orientation(oth).toRotationMatrix();
  out.axis = out.R_ref.col(1);
  const Vec3& a = out.axis;

  const Vec3 om_ref = s.angular_velocity;
  const Vec3 om_oth = om_ref + out.sigma * s.hip_rate * a;

  const Vec3 grav = -kGravity * world_up();

  struct Side {
    double m;
    Vec3 rho;    // CoM offset from hip, world
    Mat3 Iw;     // inertia about own CoM, world
    Vec3 om;
    Vec3 phi_lin;  // hip-rate column of the linear Jacobian
    Vec3 phi_ang;  // hip-rate column of the angular Jacobian
    Vec3 gamma_lin;  // velocity-product acceleration terms
    Vec3 gamma_ang;
  };

  const auto make_side = [&](Foot f, const Mat3& R, const Vec3& om, bool is_ref) {
    Side side;
    side.m = p.body_mass(f);
    side.rho = R * p.body_com(f);
    side.Iw = R * p.body_inertia(f) * R.transpose();
    side.om = om;
    if (is_ref) {
      side.phi_lin = Vec3::Zero();
      side.phi_ang = Vec3::Zero();
      side.gamma_ang = Vec3::Zero();
    } else {
      side.phi_ang = out.sigma * a;
      side.phi_lin = side.phi_ang.cross(side.rho);
      side.gamma_ang = out.sigma * s.hip_rate * om_ref.cross(a);
    }
    side.gamma_lin = side.gamma_ang.cross(side.rho) + om.cross(om.cross(side.rho));
    return side;
  };

  const Side sides[2] = {make_side(ref, out.R_ref, om_ref, true),
                         make_side(oth, R_oth, om_oth, false)};

  for (const Side& b : sides) {
    Mat37 Jl, Ja;
    Jl.block<3, 3>(0, 0) = Mat3::Identity();
    Jl.block<3, 3>(0, 3) = -skew(b.rho);
    Jl.col(6) = b.phi_lin;
    Ja.block<3, 3>(0, 0) = Mat3::Zero();
    Ja.block<3, 3>(0, 3) = Mat3::Identity();
    Ja.col(6) = b.phi_ang;

    out.M += b.m * Jl.transpose() * Jl + Ja.transpose() * b.Iw * Ja;
    const Vec3 f_lin = b.m * (grav - b.gamma_lin);
    const Vec3 f_ang = -b.Iw * b.gamma_ang - b.om.cross(b.Iw * b.om);
    out.force += Jl.transpose() * f_lin + Ja.transpose() * f_ang;
  }

  // The motor acts equal-and-opposite on the two bodies about the hip axis;
  // in these coordinates that reduces to a pure generalized force on the
  // joint coordinate regardless of which body is the reference.
  out.force[6] += motor_tau;
  return out;
}

struct SaddleSolution {
  Vec7 primal = Vec7::Zero();
  VecC multiplier;
};

/// Solves  M x = f + J' lambda  subject to  J x = rhs  (x is an acceleration
/// or a post-impulse velocity depending on the caller). Full-pivot LU keeps
/// the solve well defined when M itself is singular, as long as the
/// constrained system is not.
SaddleSolution solve_saddle(const Mat7& M, const MatC& J, const Vec7& f, const VecC& rhs,
                            const char* what) {
  const int m = static_cast<int>(J.rows());
  const int n = 7 + m;
  MatK K(n, n);
  K.setZero();
  K.topLeftCorner(7, 7) = M;
  if (m > 0) {
    K.topRightCorner(7, m) = -J.transpose();
    K.bottomLeftCorner(m, 7) = J;
  }
  VecK b(n);
  b.head<7>() = f;
  if (m > 0) b.tail(m) = rhs;

  Eigen::FullPivLU<MatK> lu(K);
  if (!lu.isInvertible()) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "singular %s system (%d constraints)", what, m);
    throw NumericalError(msg);
  }
  const VecK x = lu.solve(b);
  if (!x.allFinite()) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "non-finite %s solution (%d constraints)", what, m);
    throw NumericalError(msg);
  }
  SaddleSolution sol;
  sol.primal = x.head<7>();
  sol.multiplier = x.tail(m);
  return sol;
}

/// Rolling-contact row for the reference foot: world position of the contact
/// point and the geometric part of its acceleration (everything except J u').
struct ContactRow {
  Vec3 point = Vec3::Zero();  // world
  Vec3 c = Vec3::Zero();      // point - hip
  Vec3 gamma = Vec3::Zero();  // velocity-product acceleration of the material point
  Vec3 gdot = Vec3::Zero();   // current velocity of the material point
};

ContactRow contact_row(const HybridState& s, const WalkerParams& p, const Mat3& R) {
  ContactRow row;
  const Vec3 down_b = R.transpose() * world_down();
  const Vec3 sp = ellipsoid_support(p.foot_semi_axes(), down_b);
  row.c = R * (p.foot_center(s.reference) + sp);
  row.point = s.hip_position + row.c;

  const Vec3& om = s.angular_velocity;
  row.gdot = s.linear_velocity + om.cross(row.c);

  // The contact point migrates over the foot surface as the body rotates:
  // d(down_b)/dt = -om_b x down_b, pushed through the support-map Jacobian.
  const Vec3 om_b = R.transpose() * om;
  const Vec3 ddot_b = -om_b.cross(down_b);
  const Vec3 mdot_b = ellipsoid_support_jacobian(p.foot_semi_axes(), down_b) * ddot_b;
  row.gamma = om.cross(om.cross(row.c)) + om.cross(R * mdot_b);
  return row;
}

bool in_stance(Mode m) { return m != Mode::Flight; }

/// Impulse projection shared by both impact maps: keeps stance contact rows
/// and/or the joint-lock row, with per-row post-impulse velocity targets.
struct ImpulseOutcome {
  Vec7 v_plus = Vec7::Zero();
  bool contact_tensile = false;
  double contact_normal_impulse = 0.0;
  double stop_impulse = 0.0;
};

ImpulseOutcome project_impulse(const Assembly& asm_, const HybridState& s,
                               const WalkerParams& p, bool with_contact, bool with_stop,
                               double stop_target) {
  const int m = (with_contact ? 3 : 0) + (with_stop ? 1 : 0);
  MatC J(m, 7);
  VecC target(m);
  int row = 0;
  if (with_contact) {
    const ContactRow cr = contact_row(s, p, asm_.R_ref);
    J.block<3, 3>(0, 0) = Mat3::Identity();
    J.block<3, 3>(0, 3) = -skew(cr.c);
    J.block<3, 1>(0, 6) = Vec3::Zero();
    target.head<3>().setZero();
    row = 3;
  }
  if (with_stop) {
    J.row(row).setZero();
    J(row, 6) = 1.0;
    target[row] = stop_target;
  }

  const Vec7 v_minus = pack_velocity(s);
  const SaddleSolution sol =
      solve_saddle(asm_.M, J, asm_.M * v_minus, target, "impact");

  ImpulseOutcome out;
  out.v_plus = sol.primal;
  if (with_contact) {
    out.contact_normal_impulse = sol.multiplier[2];
    const double scale =
        1e-12 * p.mass_total * std::max(1.0, v_minus.head<6>().norm());
    out.contact_tensile = out.contact_normal_impulse < -scale;
  }
  if (with_stop) out.stop_impulse = sol.multiplier[m - 1];
  return out;
}

Quat quat_from_rotvec(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-14) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, v / angle));
}

}  // namespace

void HybridState::validate(const WalkerParams& params) const {
  const auto finite = [](const Vec3& v) { return v.allFinite(); };
  if (!std::isfinite(time) || !finite(hip_position) || !finite(linear_velocity) ||
      !finite(angular_velocity) || !std::isfinite(hip_angle) || !std::isfinite(hip_rate) ||
      !orientation.coeffs().allFinite()) {
    throw ValidationError("non-finite state");
  }
  if (std::abs(orientation.norm() - 1.0) > 1e-6) {
    throw ValidationError("orientation quaternion is not unit length");
  }
  if (in_stance(mode) && stance_foot(mode) != reference) {
    throw ValidationError("stance mode with mismatched reference body");
  }
  if (stop_engaged) {
    if (stop_side != 1 && stop_side != -1) {
      throw ValidationError("engaged stop without a side");
    }
    if (std::abs(hip_angle - stop_side * params.hard_stop_angle) > 1e-6) {
      throw ValidationError("engaged stop away from the stop angle");
    }
  }
  if (std::abs(hip_angle) > params.hard_stop_angle + 1e-6) {
    throw ValidationError("hip angle beyond the hard stop");
  }
}

DynamicsOutput continuous_dynamics(const HybridState& state, double voltage,
                                   const WalkerParams& params,
                                   const StabilizationGains& gains) {
  DynamicsOutput out;
  out.motor_torque = motor_torque(params.motor, voltage, state.hip_rate);
  const Assembly asm_ = assemble(state, params, out.motor_torque);

  const bool stance = in_stance(state.mode);
  const bool stop = state.stop_engaged;
  const int m = (stance ? 3 : 0) + (stop ? 1 : 0);
  MatC J(m, 7);
  VecC rhs(m);
  ContactRow cr;
  int row = 0;
  if (stance) {
    cr = contact_row(state, params, asm_.R_ref);
    J.block<3, 3>(0, 0) = Mat3::Identity();
    J.block<3, 3>(0, 3) = -skew(cr.c);
    J.block<3, 1>(0, 6) = Vec3::Zero();
    const double err = cr.point.z() - state.contact_height;
    rhs.head<3>() =
        -cr.gamma - gains.velocity * cr.gdot - gains.position * err * world_up();
    row = 3;
  }
  if (stop) {
    J.row(row).setZero();
    J(row, 6) = 1.0;
    const double err = state.hip_angle - state.stop_side * params.hard_stop_angle;
    rhs[row] = -gains.position * err - gains.velocity * state.hip_rate;
  }

  const SaddleSolution sol = solve_saddle(asm_.M, J, asm_.force, rhs, "dynamics");
  out.acceleration = sol.primal;

  if (stance) {
    out.contact.active = true;
    out.contact.foot = state.reference;
    out.contact.point = cr.point;
    out.contact.force = sol.multiplier.head<3>();
    out.contact.normal_force = out.contact.force.z();
    out.contact.tangential_force = out.contact.force.head<2>().norm();
    out.contact.friction_saturated =
        out.contact.tangential_force >
        params.friction_coefficient * std::max(out.contact.normal_force, 0.0);
  }
  if (stop) out.stop_torque = sol.multiplier[m - 1];
  return out;
}

BodyKinematics body_kinematics(const HybridState& state, const WalkerParams& params,
                               Foot foot) {
  BodyKinematics out;
  out.rotation = state.body_orientation(foot).toRotationMatrix();
  out.angular_velocity = state.body_angular_velocity(foot);
  const Vec3 rho = out.rotation * params.body_com(foot);
  out.com = state.hip_position + rho;
  out.com_velocity = state.linear_velocity + out.angular_velocity.cross(rho);
  return out;
}

double kinetic_energy(const HybridState& state, const WalkerParams& params) {
  double ke = 0.0;
  for (Foot f : {Foot::Left, Foot::Right}) {
    const BodyKinematics b = body_kinematics(state, params, f);
    const Mat3 Iw = b.rotation * params.body_inertia(f) * b.rotation.transpose();
    ke += 0.5 * params.body_mass(f) * b.com_velocity.squaredNorm();
    ke += 0.5 * b.angular_velocity.dot(Iw * b.angular_velocity);
  }
  return ke;
}

double potential_energy(const HybridState& state, const WalkerParams& params) {
  double pe = 0.0;
  for (Foot f : {Foot::Left, Foot::Right}) {
    pe += params.body_mass(f) * kGravity * body_kinematics(state, params, f).com.z();
  }
  return pe;
}

double total_energy(const HybridState& state, const WalkerParams& params) {
  return kinetic_energy(state, params) + potential_energy(state, params);
}

Vec3 linear_momentum(const HybridState& state, const WalkerParams& params) {
  Vec3 p = Vec3::Zero();
  for (Foot f : {Foot::Left, Foot::Right}) {
    p += params.body_mass(f) * body_kinematics(state, params, f).com_velocity;
  }
  return p;
}

Vec3 angular_momentum_about(const HybridState& state, const WalkerParams& params,
                            const Vec3& point) {
  Vec3 L = Vec3::Zero();
  for (Foot f : {Foot::Left, Foot::Right}) {
    const BodyKinematics b = body_kinematics(state, params, f);
    const Mat3 Iw = b.rotation * params.body_inertia(f) * b.rotation.transpose();
    L += params.body_mass(f) * (b.com - point).cross(b.com_velocity);
    L += Iw * b.angular_velocity;
  }
  return L;
}

Vec3 center_of_mass(const HybridState& state, const WalkerParams& params) {
  Vec3 weighted = Vec3::Zero();
  for (Foot f : {Foot::Left, Foot::Right}) {
    weighted += params.body_mass(f) * body_kinematics(state, params, f).com;
  }
  return weighted / params.mass_total;
}

Vec3 foot_support_world(const HybridState& state, Foot foot, const WalkerParams& params) {
  const Quat R = state.body_orientation(foot);
  const SupportPoint sp = foot_support_point(params, R, foot);
  return state.hip_position + R * sp.point;
}

double touchdown_clearance(const HybridState& state, Foot foot, const WalkerParams& params,
                           const Terrain& terrain) {
  const Vec3 p = foot_support_world(state, foot, params);
  return p.z() - terrain.height(p.x(), p.y());
}

double hardstop_clearance(const HybridState& state, const WalkerParams& params) {
  return params.hard_stop_angle - std::abs(state.hip_angle);
}

namespace {

struct TouchdownSolve {
  HybridState s;       // state re-expressed with the touchdown foot as reference
  ImpulseOutcome imp;  // transfer impulse with feasible engaged-stop handling
  bool stop = false;   // whether an engaged stop survives the transfer
};

TouchdownSolve solve_touchdown(const HybridState& state, Foot foot, const WalkerParams& params) {
  TouchdownSolve td{state, {}, state.stop_engaged};
  td.s.orientation = state.body_orientation(foot);
  td.s.angular_velocity = state.body_angular_velocity(foot);
  td.s.reference = foot;

  const Assembly asm_ = assemble(td.s, params, 0.0);
  td.imp = project_impulse(asm_, td.s, params, true, td.stop, 0.0);
  if (td.stop && td.s.stop_side * td.imp.stop_impulse > 1e-12 * params.mass_total) {
    // The transfer impulse would pull the joint off its stop: release it and
    // resolve the touchdown with the joint free.
    td.stop = false;
    td.imp = project_impulse(asm_, td.s, params, true, false, 0.0);
  }
  return td;
}

}  // namespace

double touchdown_normal_impulse(const HybridState& state, Foot foot,
                                const WalkerParams& params) {
  return solve_touchdown(state, foot, params).imp.contact_normal_impulse;
}

HybridState impact_touchdown(const HybridState& state, Foot foot, const WalkerParams& params,
                             const Terrain& terrain) {
  const TouchdownSolve td = solve_touchdown(state, foot, params);

  if (td.imp.contact_tensile) {
    // The foot cannot bind without being pulled down: grazing touchdown. No
    // constraint is added, and none is taken away: a flight graze stays
    // ballistic, a stance graze keeps rolling on the loaded foot it already
    // has. Demoting a stance state to flight here would discard a contact
    // that is still pushing.
    return state;
  }

  HybridState s = td.s;
  const Vec3 p = foot_support_world(s, foot, params);
  unpack_velocity(td.imp.v_plus, s);
  s.mode = (foot == Foot::Left) ? Mode::StanceLeft : Mode::StanceRight;
  s.contact_height = terrain.height(p.x(), p.y());
  if (!td.stop && s.stop_engaged) {
    s.stop_engaged = false;
    s.stop_side = 0;
  }
  if (s.stop_engaged) s.hip_rate = 0.0;
  return s;
}

HybridState impact_hard_stop(const HybridState& state, const WalkerParams& params) {
  const int side = (state.hip_angle >= 0.0) ? 1 : -1;
  // Nothing to stop unless the joint is still driving into the limit.
  if (side * state.hip_rate <= 0.0) return state;

  HybridState s = state;
  s.hip_angle = side * params.hard_stop_angle;

  const Assembly asm_ = assemble(s, params, 0.0);
  const bool stance = in_stance(s.mode);
  const double target = -params.hard_stop_restitution * s.hip_rate;

  ImpulseOutcome imp = project_impulse(asm_, s, params, stance, true, target);
  if (stance && imp.contact_tensile) {
    // Stopping the joint would tear the foot off the ground: the impact
    // launches the robot instead.
    imp = project_impulse(asm_, s, params, false, true, target);
    s.mode = Mode::Flight;
  }

  unpack_velocity(imp.v_plus, s);
  if (std::abs(s.hip_rate) < 1e-12) {
    s.hip_rate = 0.0;
    s.stop_engaged = true;
    s.stop_side = side;
  } else {
    s.stop_engaged = false;
    s.stop_side = 0;
  }
  return s;
}

HybridState standing_pose(const WalkerParams& params, Foot stance) {
  const double side = (stance == Foot::Left) ? 1.0 : -1.0;

  // x = (roll-ish, pitch-ish, hip angle). When the swing leg rests against a
  // stop the third entry is pinned there and the stop row carries the torque.
  const auto build = [&](const Vec3& x, int stop_side) {
    HybridState s;
    s.mode = (stance == Foot::Left) ? Mode::StanceLeft : Mode::StanceRight;
    s.reference = stance;
    s.orientation = quat_from_rotvec(Vec3(x[0], x[1], 0.0));
    s.hip_angle = x[2];
    s.stop_engaged = stop_side != 0;
    s.stop_side = stop_side;
    const SupportPoint sp = foot_support_point(params, s.orientation, stance);
    const Vec3 w = s.orientation * sp.point;
    s.hip_position = Vec3(0.0, 0.0, -w.z());
    s.contact_height = 0.0;
    return s;
  };

  // With the stop engaged the hip-rate equation is constrained to zero, so
  // the residual shrinks to the two tipping accelerations.
  const auto solve = [&](Vec3 x, int stop_side, int nvar) -> std::optional<Vec3> {
    const auto residual = [&](const Vec3& v) {
      const DynamicsOutput out = continuous_dynamics(build(v, stop_side), 0.0, params);
      return Vec3(out.acceleration[3], out.acceleration[4],
                  nvar == 3 ? out.acceleration[6] : 0.0);
    };
    Vec3 r = residual(x);
    const double fd_step = 1e-7;
    for (int iter = 0; iter < 60; ++iter) {
      if (r.lpNorm<Eigen::Infinity>() < 1e-11) return x;
      Mat3 Jac = Mat3::Identity();
      for (int j = 0; j < nvar; ++j) {
        Vec3 xp = x;
        xp[j] += fd_step;
        Jac.col(j) = (residual(xp) - r) / fd_step;
      }
      const Vec3 step = Jac.fullPivLu().solve(-r);
      double scale = 1.0;
      bool improved = false;
      for (int half = 0; half < 10 && !improved; ++half) {
        const Vec3 x_new = x + scale * step;
        const Vec3 r_new = residual(x_new);
        if (r_new.norm() < r.norm()) {
          x = x_new;
          r = r_new;
          improved = true;
        }
        scale *= 0.5;
      }
      if (!improved) break;
    }
    return std::nullopt;
  };

  const auto accept = [&](const Vec3& x, int stop_side) -> std::optional<HybridState> {
    const HybridState s = build(x, stop_side);
    // Reject contorted solutions of the force balance: a standing robot is
    // mostly upright. The free foot may sit slightly below the support plane
    // (the model keeps one rolling contact at a time, so the rest lean has
    // nowhere to park it); nothing moves, so that interference is inert.
    if ((s.orientation * world_up()).z() < 0.5) return std::nullopt;
    const DynamicsOutput out = continuous_dynamics(s, 0.0, params);
    if (out.acceleration.lpNorm<Eigen::Infinity>() > 1e-9) return std::nullopt;
    // An engaged stop can only push the hip inward, never pull.
    if (stop_side != 0 && stop_side * out.stop_torque > 1e-12) return std::nullopt;
    return s;
  };

  // Lean estimates from the center-of-curvature geometry; Newton refines.
  const double curv_sag = params.foot_semi_axis_sagittal * params.foot_semi_axis_sagittal /
                          params.foot_semi_axis_vertical;
  const double curv_frn = params.foot_semi_axis_frontal * params.foot_semi_axis_frontal /
                          params.foot_semi_axis_vertical;
  const Vec3 guess(side * std::atan2(0.5 * params.foot_gap, curv_frn - params.cg_offset_z),
                   std::atan2(params.cg_offset_x, curv_sag - params.cg_offset_z), 0.0);

  // Free-hanging hip first.
  double hint = 0.0;
  if (const auto x = solve(guess, 0, 3)) {
    hint = (*x)[2];
    if (std::abs(hint) < params.hard_stop_angle) {
      if (auto s = accept(*x, 0)) return *s;
    }
  }

  // Otherwise the equilibrium hip angle lies past a stop: the leg rests
  // against it and the stop carries the leftover gravity torque.
  const int first = hint < 0.0 ? -1 : 1;
  for (const int stop_side : {first, -first}) {
    Vec3 x0 = guess;
    x0[2] = stop_side * params.hard_stop_angle;
    if (const auto x = solve(x0, stop_side, 2)) {
      if (auto s = accept(*x, stop_side)) return *s;
    }
  }
  throw NumericalError("standing pose iteration did not converge");
}

HybridState place_at(const HybridState& pose, const WalkerParams& params, double x, double y,
                     double heading, const Terrain& terrain) {
  HybridState s = pose;
  const Quat yaw(Eigen::AngleAxisd(heading, Vec3::UnitZ()));
  s.orientation = yaw * pose.orientation;
  s.linear_velocity = yaw * pose.linear_velocity;
  s.angular_velocity = yaw * pose.angular_velocity;

  const Foot foot = in_stance(s.mode) ? stance_foot(s.mode) : s.reference;
  const Quat R = s.body_orientation(foot);
  const SupportPoint sp = foot_support_point(params, R, foot);
  const Vec3 w = R * sp.point;  // support point relative to the hip
  const double ground = terrain.height(x + w.x(), y + w.y());
  s.hip_position = Vec3(x, y, ground - w.z());
  s.contact_height = ground;
  return s;
}

}  // namespace zippy
