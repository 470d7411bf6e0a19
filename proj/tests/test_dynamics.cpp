#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>

#include "zippy/geometry.hpp"
#include "zippy/motor.hpp"
#include "zippy/rimless.hpp"
#include "zippy/walker_dynamics.hpp"

namespace {

using namespace zippy;

// ===========================================================================
// Independent dynamics oracle.
//
// The library solves the equations of motion in minimal coordinates with
// hand-assembled Jacobians, velocity-product terms, and a contact-migration
// correction. This oracle recovers the same accelerations from nothing but
// the scalar Lagrangian of the two-body assembly, finite differences, and
// explicit constraint rows, in the redundant coordinates
//   q = (hip position r, reference-body quaternion Q as a free 4-vector
//        in (w, x, y, z) order, hip angle phi) in R^8.
// Kinetic energy is evaluated from body rotation matrices and their exact
// algebraic rates only; no angular-velocity Jacobians, no migration formula.
// The quaternion is kept honest by a unit-norm constraint row, and the
// rolling contact by rows stating that the material point currently at the
// contact has zero velocity. Everything q-dependent is differentiated
// numerically (central differences with one Richardson extrapolation), so a
// wrong analytic term in the implementation cannot also be wrong here.
// ===========================================================================
namespace oracle {

using Vec4 = Eigen::Vector4d;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat38 = Eigen::Matrix<double, 3, 8>;

// Homogeneous quadratic form of the quaternion-to-matrix map: equals
// |Q|^2 times the rotation matrix of Q/|Q|.
Mat3 homogeneous_rotation(const Vec4& Q) {
  const double w = Q[0], x = Q[1], y = Q[2], z = Q[3];
  Mat3 R;
  R << w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return R;
}

Mat3 rotation_of(const Vec4& Q) { return homogeneous_rotation(Q) / Q.squaredNorm(); }

// Exact directional derivative of rotation_of along Qd: polarization of the
// quadratic map plus the quotient rule. No finite differencing here.
Mat3 rotation_rate(const Vec4& Q, const Vec4& Qd) {
  const double n = Q.squaredNorm();
  const double ndot = 2.0 * Q.dot(Qd);
  const Mat3 Rh_dot =
      0.5 * (homogeneous_rotation(Q + Qd) - homogeneous_rotation(Q - Qd));
  return Rh_dot / n - homogeneous_rotation(Q) * (ndot / (n * n));
}

struct Setup {
  WalkerParams params;
  Foot reference = Foot::Left;
  bool contact = false;  // rolling rows for the reference foot
  bool stop = false;     // joint locked at the hard stop
  double tau = 0.0;      // generalized joint torque
};

struct Frames {
  Mat3 R[2];     // [0] reference body, [1] other body
  Mat3 Rdot[2];  // exact rates along (q, qd)
};

Frames frames_of(const Setup& su, const Vec8& q, const Vec8& qd) {
  Frames f;
  const Vec4 Q = q.segment<4>(3);
  const Vec4 Qd = qd.segment<4>(3);
  f.R[0] = rotation_of(Q);
  f.Rdot[0] = rotation_rate(Q, Qd);

  const double sigma = (su.reference == Foot::Left) ? 1.0 : -1.0;
  const double ang = sigma * q[7];
  const double c = std::cos(ang), s = std::sin(ang);
  Mat3 H, Hprime;
  H << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  Hprime << -s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s;
  f.R[1] = f.R[0] * H;
  f.Rdot[1] = f.Rdot[0] * H + f.R[0] * Hprime * (sigma * qd[7]);
  return f;
}

double kinetic(const Setup& su, const Vec8& q, const Vec8& qd) {
  const Frames f = frames_of(su, q, qd);
  const Foot feet[2] = {su.reference, other_foot(su.reference)};
  double t = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double m = su.params.body_mass(feet[i]);
    const Vec3& com = su.params.body_com(feet[i]);
    const Mat3& inertia = su.params.body_inertia(feet[i]);
    const Vec3 v = qd.head<3>() + f.Rdot[i] * com;
    // Rotational energy from the rotation rate alone:
    // (1/2) tr(Rdot J Rdot') with J = (tr(I)/2) 1 - I equals (1/2) w' I w.
    const Mat3 second_moment = 0.5 * inertia.trace() * Mat3::Identity() - inertia;
    t += 0.5 * m * v.squaredNorm();
    t += 0.5 * (f.Rdot[i] * second_moment * f.Rdot[i].transpose()).trace();
  }
  return t;
}

double potential(const Setup& su, const Vec8& q) {
  const Frames f = frames_of(su, q, Vec8::Zero());
  const Foot feet[2] = {su.reference, other_foot(su.reference)};
  double v = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double m = su.params.body_mass(feet[i]);
    v += m * kGravity * (q.head<3>() + f.R[i] * su.params.body_com(feet[i])).z();
  }
  return v;
}

double lagrangian(const Setup& su, const Vec8& q, const Vec8& qd) {
  return kinetic(su, q, qd) - potential(su, q);
}

// T is exactly quadratic in qd, so the mass matrix follows from
// polarization with no truncation error.
Mat8 mass_of(const Setup& su, const Vec8& q) {
  Mat8 m;
  double diag[8];
  for (int i = 0; i < 8; ++i) {
    Vec8 e = Vec8::Zero();
    e[i] = 1.0;
    diag[i] = kinetic(su, q, e);
  }
  for (int i = 0; i < 8; ++i) {
    for (int j = i; j < 8; ++j) {
      Vec8 e = Vec8::Zero();
      e[i] += 1.0;
      e[j] += 1.0;
      const double tij = kinetic(su, q, e);
      m(i, j) = (i == j) ? 2.0 * diag[i] : tij - diag[i] - diag[j];
      m(j, i) = m(i, j);
    }
  }
  return m;
}

// Velocity rows of the rolling constraint: the material particle of the
// reference foot currently at the support point has zero world velocity,
//   rdot + Rdot(q, qd) * m0(q) = 0,
// which is linear in qd with coefficients A(q). The support point m0 is
// re-evaluated at every displaced q, so differentiating A numerically picks
// up the contact-migration physics with no help from the implementation.
Mat38 contact_rows(const Setup& su, const Vec8& q) {
  const Vec4 Q = q.segment<4>(3);
  const Mat3 R = rotation_of(Q);
  const Vec3 m0 = su.params.foot_center(su.reference) +
                  ellipsoid_support(su.params.foot_semi_axes(), R.transpose() * world_down());
  Mat38 a = Mat38::Zero();
  a.block<3, 3>(0, 0).setIdentity();
  for (int k = 0; k < 4; ++k) {
    Vec4 e = Vec4::Zero();
    e[k] = 1.0;
    a.col(3 + k) = rotation_rate(Q, e) * m0;
  }
  return a;
}

struct Result {
  Vec7 udot;
  Vec3 contact_force = Vec3::Zero();
};

Result constrained_accelerations(const Setup& su, const Vec8& q, const Vec8& qd) {
  const Mat8 m = mass_of(su, q);

  // dL/dq, central differences with one Richardson step.
  Vec8 dl_dq;
  for (int j = 0; j < 8; ++j) {
    const double h = 3e-5 * std::max(1.0, std::abs(q[j]));
    const auto diff = [&](double hh) {
      Vec8 qp = q, qm = q;
      qp[j] += hh;
      qm[j] -= hh;
      return (lagrangian(su, qp, qd) - lagrangian(su, qm, qd)) / (2.0 * hh);
    };
    dl_dq[j] = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
  }

  // (d/dq of the generalized momentum) contracted with qd.
  const double eps = 1e-5 / std::max(1.0, qd.norm());
  const auto momentum_drift = [&](double hh) {
    return (((mass_of(su, q + hh * qd) - mass_of(su, q - hh * qd)) / (2.0 * hh)) * qd).eval();
  };
  const Vec8 coriolis = (4.0 * momentum_drift(0.5 * eps) - momentum_drift(eps)) / 3.0;

  Vec8 rhs_top = dl_dq - coriolis;
  rhs_top[7] += su.tau;

  const int rows = 1 + (su.contact ? 3 : 0) + (su.stop ? 1 : 0);
  MatX a = MatX::Zero(rows, 8);
  VecX accel_rhs = VecX::Zero(rows);
  a.row(0).segment<4>(3) = 2.0 * q.segment<4>(3).transpose();
  accel_rhs[0] = -2.0 * qd.segment<4>(3).squaredNorm();
  int r = 1;
  if (su.contact) {
    a.middleRows<3>(r) = contact_rows(su, q);
    const double hh = 1e-5 / std::max(1.0, qd.norm());
    const auto a_drift = [&](double s) {
      return ((contact_rows(su, q + s * qd) - contact_rows(su, q - s * qd)) / (2.0 * s)).eval();
    };
    const Mat38 a_dot = (4.0 * a_drift(0.5 * hh) - a_drift(hh)) / 3.0;
    accel_rhs.segment<3>(r) = -a_dot * qd;
    r += 3;
  }
  if (su.stop) {
    a(r, 7) = 1.0;
    accel_rhs[r] = 0.0;
  }

  const int n = 8 + rows;
  MatX kkt = MatX::Zero(n, n);
  kkt.topLeftCorner(8, 8) = m;
  kkt.topRightCorner(8, rows) = -a.transpose();
  kkt.bottomLeftCorner(rows, 8) = a;
  VecX b(n);
  b.head<8>() = rhs_top;
  b.tail(rows) = accel_rhs;
  const VecX x = kkt.fullPivLu().solve(b);
  const Vec8 qdd = x.head<8>();

  Result res;
  res.udot.head<3>() = qdd.head<3>();
  // With |Q| = 1 along the true motion, w = 2 Qdot x conj(Q); its rate is
  // 2 Qddot x conj(Q) because Qdot x conj(Qdot) is a pure real quaternion.
  const Quat Qq(q[3], q[4], q[5], q[6]);
  const Quat Qdd(qdd[3], qdd[4], qdd[5], qdd[6]);
  res.udot.segment<3>(3) = 2.0 * (Qdd * Qq.conjugate()).vec();
  res.udot[6] = qdd[7];
  if (su.contact) res.contact_force = x.segment<3>(8 + 1);
  return res;
}

Vec8 pack_q(const HybridState& s) {
  Vec8 q;
  q.head<3>() = s.hip_position;
  q[3] = s.orientation.w();
  q[4] = s.orientation.x();
  q[5] = s.orientation.y();
  q[6] = s.orientation.z();
  q[7] = s.hip_angle;
  return q;
}

Vec8 pack_qd(const HybridState& s) {
  Vec8 qd;
  qd.head<3>() = s.linear_velocity;
  const Quat w(0.0, s.angular_velocity.x(), s.angular_velocity.y(), s.angular_velocity.z());
  const Quat qdot_q = w * s.orientation;
  qd[3] = 0.5 * qdot_q.w();
  qd[4] = 0.5 * qdot_q.x();
  qd[5] = 0.5 * qdot_q.y();
  qd[6] = 0.5 * qdot_q.z();
  qd[7] = s.hip_rate;
  return qd;
}

}  // namespace oracle

// ---------------------------------------------------------------------------
// shared helpers for building states
// ---------------------------------------------------------------------------

Quat quat_exp(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-15) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, v / angle));
}

// Stance state on the support plane through its own contact point, with the
// contact-point velocity exactly zero so the stabilization feedback vanishes
// and the smooth dynamics can be compared term-for-term against the oracle.
HybridState rolling_stance_state(const WalkerParams& params, Foot foot, const Vec3& lean,
                                 double phi, const Vec3& omega, double phi_rate,
                                 const Vec3& hip_xy_z) {
  HybridState s;
  s.mode = (foot == Foot::Left) ? Mode::StanceLeft : Mode::StanceRight;
  s.reference = foot;
  s.orientation = quat_exp(lean);
  s.hip_angle = phi;
  s.angular_velocity = omega;
  s.hip_rate = phi_rate;
  s.hip_position = hip_xy_z;

  const Mat3 R = s.orientation.toRotationMatrix();
  const Vec3 support_body =
      params.foot_center(foot) + ellipsoid_support(params.foot_semi_axes(), R.transpose() * world_down());
  const Vec3 c = R * support_body;
  s.linear_velocity = -omega.cross(c);
  s.contact_height = (s.hip_position + c).z();
  return s;
}

uint64_t mix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double uniform(uint64_t& state, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(mix64(state) >> 11) * 0x1.0p-53);
}

Vec3 uniform_vec3(uint64_t& state, double lo, double hi) {
  return Vec3(uniform(state, lo, hi), uniform(state, lo, hi), uniform(state, lo, hi));
}

HybridState random_walker_state(uint64_t& rng, const WalkerParams& params, bool stance) {
  HybridState s;
  const Foot foot = (mix64(rng) & 1) ? Foot::Left : Foot::Right;
  s.reference = foot;
  s.mode = stance ? ((foot == Foot::Left) ? Mode::StanceLeft : Mode::StanceRight) : Mode::Flight;
  s.orientation = quat_exp(Vec3(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5),
                                uniform(rng, -3.0, 3.0)));
  s.hip_angle = uniform(rng, -0.95, 0.95) * params.hard_stop_angle;
  s.angular_velocity = uniform_vec3(rng, -10.0, 10.0);
  s.linear_velocity = uniform_vec3(rng, -0.5, 0.5);
  s.hip_rate = uniform(rng, -20.0, 20.0);

  // Put the relevant support point near the ground, touching or slightly
  // penetrating, as the event machinery would at an impact instant.
  const Quat R = s.body_orientation(foot);
  const SupportPoint sp = foot_support_point(params, R, foot);
  const double support_z_target = uniform(rng, -0.001, 0.0005);
  const Vec3 w = R * sp.point;
  s.hip_position = Vec3(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05),
                        support_z_target - w.z());
  s.contact_height = 0.0;
  return s;
}

double motor_tau_reference(const MotorParams& m, double voltage, double rate) {
  return m.gearbox_efficiency * m.gear_ratio * m.torque_constant *
             (voltage - m.back_emf_constant * m.gear_ratio * rate) / m.winding_resistance -
         m.viscous_friction * rate;
}

TEST_SUITE("smooth dynamics against the Lagrangian oracle") {
  void compare_with_oracle(const HybridState& state, double voltage,
                           const WalkerParams& params) {
    const DynamicsOutput impl = continuous_dynamics(state, voltage, params);

    oracle::Setup su;
    su.params = params;
    su.reference = state.reference;
    su.contact = state.mode != Mode::Flight;
    su.stop = state.stop_engaged;
    su.tau = motor_tau_reference(params.motor, voltage, state.hip_rate);
    const oracle::Vec8 q = oracle::pack_q(state);
    const oracle::Vec8 qd = oracle::pack_qd(state);

    // The kinetic and potential observables must agree with the primitive
    // definitions before the accelerations are even worth comparing.
    CHECK(kinetic_energy(state, params) ==
          doctest::Approx(oracle::kinetic(su, q, qd)).epsilon(1e-12));
    CHECK(potential_energy(state, params) ==
          doctest::Approx(oracle::potential(su, q)).epsilon(1e-12));

    const oracle::Result ref = oracle::constrained_accelerations(su, q, qd);
    const double scale = std::max(ref.udot.norm(), 1.0);
    CHECK((impl.acceleration - ref.udot).norm() <= 1e-6 * scale);
    CHECK((impl.acceleration.head<3>() - ref.udot.head<3>()).norm() <= 1e-6 * scale);
    CHECK((impl.acceleration.segment<3>(3) - ref.udot.segment<3>(3)).norm() <= 1e-6 * scale);
    CHECK(std::abs(impl.acceleration[6] - ref.udot[6]) <= 1e-6 * scale);
    if (su.contact) {
      CHECK((impl.contact.force - ref.contact_force).norm() <=
            1e-6 * std::max(ref.contact_force.norm(), 1.0));
    }
  }

  TEST_CASE("left stance with rolling, gyroscopic, and migration terms active") {
    const WalkerParams params = zippy_params();
    const HybridState s = rolling_stance_state(
        params, Foot::Left, Vec3(-0.18, 0.09, 0.04), 0.11, Vec3(2.1, -1.3, 0.7), 3.4,
        Vec3(0.004, -0.002, 0.0243));
    compare_with_oracle(s, 2.5, params);
  }

  TEST_CASE("right stance reverses the hinge composition") {
    const WalkerParams params = zippy_params();
    const HybridState s = rolling_stance_state(
        params, Foot::Right, Vec3(0.21, 0.13, -0.35), -0.14, Vec3(-1.7, 2.4, -0.9), -5.2,
        Vec3(-0.003, 0.006, 0.0251));
    compare_with_oracle(s, -1.8, params);
  }

  TEST_CASE("engaged hard stop adds a joint lock row") {
    const WalkerParams params = zippy_params();
    HybridState s = rolling_stance_state(params, Foot::Right, Vec3(0.12, -0.07, 0.9),
                                         params.hard_stop_angle, Vec3(1.1, 0.8, -1.4), 0.0,
                                         Vec3(0.01, 0.0, 0.0249));
    s.stop_engaged = true;
    s.stop_side = 1;
    compare_with_oracle(s, 3.2, params);
  }

  TEST_CASE("flight is the unconstrained two-body system") {
    const WalkerParams params = zippy_params();
    HybridState s;
    s.mode = Mode::Flight;
    s.reference = Foot::Right;
    s.orientation = quat_exp(Vec3(0.3, -0.25, 1.2));
    s.hip_position = Vec3(0.02, 0.01, 0.05);
    s.hip_angle = -0.2;
    s.linear_velocity = Vec3(0.3, -0.1, 0.4);
    s.angular_velocity = Vec3(-4.0, 6.0, 2.5);
    s.hip_rate = 11.0;
    compare_with_oracle(s, -3.2, params);
  }

  TEST_CASE("asymmetric mass distribution exercises every coupling") {
    WalkerParams params = zippy_params();
    params.mass_left = 0.016;
    params.mass_right = 0.009;
    params.body_com_left = Vec3(0.004, 0.012, -0.014);
    params.body_com_right = Vec3(0.0015, -0.0065, -0.016);
    const Vec3 combined = (params.mass_left * params.body_com_left +
                           params.mass_right * params.body_com_right) /
                          params.mass_total;
    params.cg_offset_x = combined.x();
    params.cg_offset_z = combined.z() + params.hip_height;
    params.body_com_left.y() =
        -params.mass_right * params.body_com_right.y() / params.mass_left;
    params.body_inertia_left = Vec3(3.1e-6, 3.6e-6, 2.4e-6).asDiagonal();
    params.body_inertia_right = Vec3(2.2e-6, 2.7e-6, 1.9e-6).asDiagonal();
    params.validate();

    const HybridState s = rolling_stance_state(
        params, Foot::Left, Vec3(-0.2, 0.15, -0.6), 0.22, Vec3(3.0, 2.2, -1.8), -7.5,
        Vec3(0.0, 0.0, 0.0246));
    compare_with_oracle(s, 1.9, params);
  }
}

TEST_SUITE("motor torque and current") {
  TEST_CASE("zero command at rest produces nothing") {
    const MotorParams m;
    CHECK(motor_torque(m, 0.0, 0.0) == 0.0);
    CHECK(motor_current(m, 0.0, 0.0) == 0.0);
    CHECK(motor_power(m, 0.0, 0.0) == 0.0);
  }

  TEST_CASE("back EMF cancels the supply at the no-load speed") {
    MotorParams m;
    m.viscous_friction = 0.0;
    const double v = 2.4;
    const double no_load = v / (m.back_emf_constant * m.gear_ratio);
    CHECK(std::abs(motor_torque(m, v, no_load)) < 1e-15);
    CHECK(std::abs(motor_current(m, v, no_load)) < 1e-14);
  }

  TEST_CASE("stall torque at the rail matches the single-line evaluation") {
    const MotorParams m;
    // 0.8 * 26 * 1.2e-3 * 3.2 / 5.0
    CHECK(motor_torque(m, 3.2, 0.0) == doctest::Approx(1.597440e-2).epsilon(1e-12));
    CHECK(motor_torque(m, 3.2, 0.0) == doctest::Approx(m.stall_torque()).epsilon(1e-15));
  }

  TEST_CASE("running point, frozen arithmetic") {
    const MotorParams m;
    // I = (2 - 1.2e-3 * 26 * 10) / 5, tau = 0.8 * 26 * 1.2e-3 * I - 1e-6 * 10
    CHECK(motor_current(m, 2.0, 10.0) == doctest::Approx(0.3376).epsilon(1e-14));
    CHECK(motor_torque(m, 2.0, 10.0) == doctest::Approx(8.416496e-3).epsilon(1e-12));
    CHECK(motor_power(m, 2.0, 10.0) == doctest::Approx(2.0 * 0.3376).epsilon(1e-14));
  }

  TEST_CASE("commands beyond the rail saturate") {
    const MotorParams m;
    CHECK(motor_torque(m, 5.0, 0.0) == motor_torque(m, 3.2, 0.0));
    CHECK(motor_torque(m, -9.0, 0.0) == motor_torque(m, -3.2, 0.0));
    CHECK(motor_current(m, 4.1, 2.0) == motor_current(m, 3.2, 2.0));
    CHECK(motor_power(m, 4.1, 2.0) == motor_power(m, 3.2, 2.0));
  }
}

TEST_SUITE("standing equilibrium") {
  TEST_CASE("the default build stands passively on either foot") {
    const WalkerParams params = zippy_params();
    for (Foot foot : {Foot::Left, Foot::Right}) {
      CAPTURE(to_string(foot));
      const HybridState s = standing_pose(params, foot);
      const DynamicsOutput out = continuous_dynamics(s, 0.0, params);
      CHECK(out.acceleration.lpNorm<Eigen::Infinity>() < 1e-9);

      // Equilibrium here means the combined weight acts straight through the
      // contact point.
      const Vec3 com = center_of_mass(s, params);
      CHECK(std::abs(com.x() - out.contact.point.x()) < 1e-9);
      CHECK(std::abs(com.y() - out.contact.point.y()) < 1e-9);

      // Static force balance: the ground carries the full weight.
      CHECK(out.contact.normal_force == doctest::Approx(0.245250).epsilon(1e-9));
      CHECK(out.contact.tangential_force < 1e-9);
      CHECK_FALSE(out.contact.friction_saturated);

      // One rolling contact at a time: the rest lean tucks the free foot
      // about gap * sin(roll) below the support plane. Nothing moves, so the
      // interference is inert; it just must stay small.
      const double clearance =
          touchdown_clearance(s, other_foot(foot), params, Terrain::flat());
      CHECK(clearance < 0.0);
      CHECK(clearance > -2.5e-3);
      CHECK(std::abs(s.hip_angle) < params.hard_stop_angle);
    }
  }

  TEST_CASE("rest lean matches the center-of-curvature estimate") {
    const WalkerParams params = zippy_params();
    const HybridState s = standing_pose(params, Foot::Left);
    const Mat3 r = s.orientation.toRotationMatrix();
    // The foot's center of curvature sits above the CG, so the body hangs
    // like a pendulum from the stance foot's center: the mass below the hip
    // swings over the contact while the up axis tips away from it.
    const Vec3 up = r.col(2);
    CHECK(up.y() < -0.05);       // top away from the left foot
    CHECK(up.x() > 0.02);        // and pitched forward
    const double roll = std::asin(-up.y());
    const double pitch = std::asin(up.x());
    CHECK(roll == doctest::Approx(0.205).epsilon(0.35));
    CHECK(pitch == doctest::Approx(0.114).epsilon(0.35));
  }

  TEST_CASE("the scaled build also stands") {
    const WalkerParams params = scaled_mugatu_params();
    const HybridState s = standing_pose(params, Foot::Right);
    const DynamicsOutput out = continuous_dynamics(s, 0.0, params);
    CHECK(out.acceleration.lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(out.contact.normal_force ==
          doctest::Approx(params.mass_total * kGravity).epsilon(1e-9));
  }

  TEST_CASE("placement keeps the foot on the terrain") {
    const WalkerParams params = zippy_params();
    const Terrain stairs = Terrain::staircase(0.002, 0.03, 10);
    const HybridState pose = standing_pose(params, Foot::Left);
    const HybridState moved = place_at(pose, params, 0.095, 0.01, 0.6, stairs);
    CHECK(moved.hip_position.x() == doctest::Approx(0.095).epsilon(1e-12));
    CHECK(moved.hip_position.y() == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(std::abs(touchdown_clearance(moved, stance_foot(moved.mode), params, stairs)) <
          1e-15);
    // Still an equilibrium after the rigid motion.
    const DynamicsOutput out = continuous_dynamics(moved, 0.0, params);
    CHECK(out.acceleration.lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_SUITE("event guards") {
  TEST_CASE("touchdown clearance is the support height above the terrain") {
    const WalkerParams params = zippy_params();
    HybridState s;
    s.mode = Mode::StanceLeft;
    s.reference = Foot::Left;
    // Upright pose: each foot bottoms out one vertical semi-axis below its
    // ellipsoid center, so this hip height puts the soles exactly on z = 0.
    const double touch_z =
        params.hip_height - params.foot_center_height + params.foot_semi_axis_vertical;
    s.hip_position = Vec3(0.0, 0.0, touch_z + 0.001);
    CHECK(touchdown_clearance(s, Foot::Right, params, Terrain::flat()) ==
          doctest::Approx(0.001).epsilon(1e-9));
    s.hip_position.z() = touch_z;
    CHECK(std::abs(touchdown_clearance(s, Foot::Right, params, Terrain::flat())) < 1e-15);
  }

  TEST_CASE("joint range margin hits zero exactly at the stop") {
    const WalkerParams params = zippy_params();
    HybridState s;
    s.hip_angle = params.hard_stop_angle;
    CHECK(hardstop_clearance(s, params) == 0.0);
    s.hip_angle = -params.hard_stop_angle;
    CHECK(hardstop_clearance(s, params) == 0.0);
    s.hip_angle = 0.1;
    CHECK(hardstop_clearance(s, params) ==
          doctest::Approx(params.hard_stop_angle - 0.1).epsilon(1e-15));
  }

  TEST_CASE("state validation rejects inconsistent hybrid flags") {
    const WalkerParams params = zippy_params();
    HybridState s = standing_pose(params, Foot::Left);
    CHECK_NOTHROW(s.validate(params));
    HybridState bad = s;
    bad.mode = Mode::StanceRight;
    CHECK_THROWS_AS(bad.validate(params), ValidationError);
    bad = s;
    bad.stop_engaged = true;
    bad.stop_side = 1;
    CHECK_THROWS_AS(bad.validate(params), ValidationError);
    bad = s;
    bad.hip_angle = params.hard_stop_angle + 0.01;
    CHECK_THROWS_AS(bad.validate(params), ValidationError);
    bad = s;
    bad.linear_velocity.x() = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(params), ValidationError);
  }
}

TEST_SUITE("flight conservation laws") {
  using Vec15 = Eigen::Matrix<double, 15, 1>;

  Vec15 pack_full(const HybridState& s) {
    Vec15 y;
    y.segment<3>(0) = s.hip_position;
    y[3] = s.orientation.w();
    y[4] = s.orientation.x();
    y[5] = s.orientation.y();
    y[6] = s.orientation.z();
    y[7] = s.hip_angle;
    y.segment<3>(8) = s.linear_velocity;
    y.segment<3>(11) = s.angular_velocity;
    y[14] = s.hip_rate;
    return y;
  }

  HybridState unpack_full(const Vec15& y, const HybridState& like) {
    HybridState s = like;
    s.hip_position = y.segment<3>(0);
    s.orientation = Quat(y[3], y[4], y[5], y[6]).normalized();
    s.hip_angle = y[7];
    s.linear_velocity = y.segment<3>(8);
    s.angular_velocity = y.segment<3>(11);
    s.hip_rate = y[14];
    return s;
  }

  Vec15 state_rate(const Vec15& y, const HybridState& like, double voltage,
                   const WalkerParams& params) {
    const HybridState s = unpack_full(y, like);
    const DynamicsOutput out = continuous_dynamics(s, voltage, params);
    Vec15 dy;
    dy.segment<3>(0) = s.linear_velocity;
    const Quat w(0.0, s.angular_velocity.x(), s.angular_velocity.y(), s.angular_velocity.z());
    const Quat qdot = w * s.orientation;
    dy[3] = 0.5 * qdot.w();
    dy[4] = 0.5 * qdot.x();
    dy[5] = 0.5 * qdot.y();
    dy[6] = 0.5 * qdot.z();
    dy[7] = s.hip_rate;
    dy.segment<7>(8) = out.acceleration;
    return dy;
  }

  Vec15 rk4(const Vec15& y, double h, const HybridState& like, double voltage,
            const WalkerParams& params) {
    const Vec15 k1 = state_rate(y, like, voltage, params);
    const Vec15 k2 = state_rate(y + 0.5 * h * k1, like, voltage, params);
    const Vec15 k3 = state_rate(y + 0.5 * h * k2, like, voltage, params);
    const Vec15 k4 = state_rate(y + h * k3, like, voltage, params);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  TEST_CASE("momentum falls at weight rate; angular momentum follows gravity's moment") {
    const WalkerParams params = zippy_params();
    HybridState s;
    s.mode = Mode::Flight;
    s.reference = Foot::Left;
    s.orientation = quat_exp(Vec3(0.2, -0.3, 0.8));
    s.hip_position = Vec3(0.01, -0.02, 0.06);
    s.hip_angle = 0.15;
    s.linear_velocity = Vec3(0.25, 0.1, 0.3);
    s.angular_velocity = Vec3(5.0, -3.0, 2.0);
    s.hip_rate = -9.0;

    const double h = 1e-5;
    const Vec15 y0 = pack_full(s);
    // Zero voltage still leaves joint friction: an internal torque, which
    // must not disturb either total.
    const HybridState fwd = unpack_full(rk4(y0, h, s, 0.0, params), s);
    const HybridState bwd = unpack_full(rk4(y0, -h, s, 0.0, params), s);

    const Vec3 dp = (linear_momentum(fwd, params) - linear_momentum(bwd, params)) / (2.0 * h);
    const Vec3 expected_dp = params.mass_total * kGravity * world_down();
    CHECK((dp - expected_dp).norm() < 1e-6 * expected_dp.norm());

    const Vec3 pivot(0.1, -0.05, 0.02);
    const Vec3 dl = (angular_momentum_about(fwd, params, pivot) -
                     angular_momentum_about(bwd, params, pivot)) /
                    (2.0 * h);
    const Vec3 expected_dl =
        (center_of_mass(s, params) - pivot).cross(params.mass_total * kGravity * world_down());
    CHECK((dl - expected_dl).norm() < 1e-5 * std::max(expected_dl.norm(), 1e-6));
  }
}

TEST_SUITE("touchdown impact map") {
  TEST_CASE("zero pre-impact velocity maps to itself") {
    const WalkerParams params = zippy_params();
    uint64_t rng = 11;
    for (int i = 0; i < 20; ++i) {
      HybridState s = random_walker_state(rng, params, false);
      s.linear_velocity.setZero();
      s.angular_velocity.setZero();
      s.hip_rate = 0.0;
      const Foot foot = (i & 1) ? Foot::Left : Foot::Right;
      const HybridState post = impact_touchdown(s, foot, params, Terrain::flat());
      CHECK(post.linear_velocity.norm() < 1e-15);
      CHECK(post.angular_velocity.norm() < 1e-15);
      CHECK(post.hip_rate == 0.0);
      CHECK(post.mode == ((foot == Foot::Left) ? Mode::StanceLeft : Mode::StanceRight));
    }
  }

  TEST_CASE("kinetic energy never increases and the map is idempotent") {
    const WalkerParams params = zippy_params();
    uint64_t rng = 2024;
    int bound = 0, released = 0;
    for (int i = 0; i < 1000; ++i) {
      const bool stance_pre = (i % 3) != 0;
      const HybridState pre = random_walker_state(rng, params, stance_pre);
      const Foot foot =
          stance_pre ? other_foot(stance_foot(pre.mode)) : ((i & 1) ? Foot::Left : Foot::Right);
      const double ke_pre = kinetic_energy(pre, params);
      const HybridState post = impact_touchdown(pre, foot, params, Terrain::flat());
      const double ke_post = kinetic_energy(post, params);
      CHECK(ke_post <= ke_pre + 1e-12);

      const Mode bound_mode = (foot == Foot::Left) ? Mode::StanceLeft : Mode::StanceRight;
      if (post.mode != bound_mode) {
        ++released;
        // A touchdown that does not bind leaves the state exactly as it was:
        // flight stays flight, a loaded stance foot stays loaded.
        CHECK(post.mode == pre.mode);
        CHECK((post.linear_velocity - pre.linear_velocity).norm() == 0.0);
        CHECK((post.angular_velocity - pre.angular_velocity).norm() == 0.0);
        CHECK(post.hip_rate == pre.hip_rate);
        continue;
      }
      ++bound;

      // The bound foot's material contact point is at rest.
      const Vec3 c = foot_support_world(post, foot, params) - post.hip_position;
      const Vec3 contact_vel = post.linear_velocity + post.angular_velocity.cross(c);
      CHECK(contact_vel.norm() < 1e-10 * std::max(1.0, pre.linear_velocity.norm() +
                                                           pre.angular_velocity.norm()));

      const HybridState again = impact_touchdown(post, foot, params, Terrain::flat());
      CHECK((again.linear_velocity - post.linear_velocity).norm() < 1e-12);
      CHECK((again.angular_velocity - post.angular_velocity).norm() < 1e-12);
      CHECK(std::abs(again.hip_rate - post.hip_rate) < 1e-12);
      CHECK(again.mode == post.mode);
    }
    // The sweep must exercise both outcomes to mean anything.
    CHECK(bound > 100);
    CHECK(released > 20);
  }

  TEST_CASE("support transfer between spokes loses exactly the classic ratio") {
    // Two point masses at the hip, negligible rotary inertia, and
    // needle-thin feet at the ends of rigid legs make the assembly a planar
    // spoked wheel; the touchdown projection must then reproduce the
    // closed-form transfer loss cos(2 alpha).
    const double alpha = 0.349065850398865915;  // 20 degrees
    const double leg = 0.25;
    WalkerParams params;
    params.mass_total = 1.0;
    params.mass_left = 0.5;
    params.mass_right = 0.5;
    params.hip_height = leg + 1e-6;
    params.foot_center_height = 1e-6;
    params.foot_semi_axis_sagittal = 1e-12;
    params.foot_semi_axis_frontal = 1e-12;
    params.foot_semi_axis_vertical = 1e-12;
    params.foot_gap = 1e-12;
    params.cg_offset_x = 0.0;
    params.cg_offset_z = params.hip_height;
    params.body_com_left = Vec3::Zero();
    params.body_com_right = Vec3::Zero();
    params.body_inertia_left = 1e-12 * Mat3::Identity();
    params.body_inertia_right = 1e-12 * Mat3::Identity();
    params.hard_stop_angle = 1.2;
    params.validate();

    HybridState s;
    s.mode = Mode::StanceLeft;
    s.reference = Foot::Left;
    s.orientation = Quat(Eigen::AngleAxisd(alpha, Vec3::UnitY()));
    s.hip_angle = -2.0 * alpha;  // swing leg one spoke ahead
    const double omega0 = 1.2;
    s.angular_velocity = Vec3(0.0, omega0, 0.0);

    const Vec3 c_old = foot_support_world(s, Foot::Left, params);  // before placing the hip
    s.hip_position = Vec3(0.0, 0.0, -c_old.z());
    const Vec3 spoke_old = c_old;  // hip at origin: support offset = spoke vector
    s.linear_velocity = s.angular_velocity.cross(-spoke_old);
    s.contact_height = 0.0;

    const double v_pre = s.linear_velocity.norm();
    const HybridState post = impact_touchdown(s, Foot::Right, params, Terrain::flat());
    REQUIRE(post.mode == Mode::StanceRight);

    const double expected = std::cos(2.0 * alpha);
    CHECK(post.linear_velocity.norm() / v_pre == doctest::Approx(expected).epsilon(1e-9));
    CHECK(post.angular_velocity.y() / omega0 == doctest::Approx(expected).epsilon(1e-9));

    // Post-impact the hub velocity is perpendicular to the new spoke.
    const Vec3 spoke_new = foot_support_world(post, Foot::Right, params) - post.hip_position;
    CHECK(std::abs(post.linear_velocity.dot(spoke_new.normalized())) < 1e-9 * v_pre);

    const RimlessWheelParams wheel{leg, alpha, 0.0, 1.0};
    CHECK(rimless_impact_ratio(wheel) == doctest::Approx(expected).epsilon(1e-15));
  }

  TEST_CASE("a rising foot is released to flight, not glued") {
    const WalkerParams params = zippy_params();
    HybridState s;
    s.mode = Mode::Flight;
    s.reference = Foot::Left;
    s.hip_position = Vec3(0.0, 0.0, params.hip_height);
    s.linear_velocity = Vec3(0.1, 0.0, 1.5);  // strongly upward
    s.angular_velocity = Vec3::Zero();
    const HybridState post = impact_touchdown(s, Foot::Left, params, Terrain::flat());
    CHECK(post.mode == Mode::Flight);
    CHECK((post.linear_velocity - s.linear_velocity).norm() == 0.0);
  }
}

TEST_SUITE("hard stop impact map") {
  TEST_CASE("zero rate at the stop is a no-op") {
    const WalkerParams params = zippy_params();
    HybridState s = standing_pose(params, Foot::Left);
    s.hip_angle = params.hard_stop_angle;
    s.hip_rate = 0.0;
    const HybridState post = impact_hard_stop(s, params);
    CHECK(post.hip_rate == 0.0);
    CHECK(post.stop_engaged == s.stop_engaged);
    CHECK((post.linear_velocity - s.linear_velocity).norm() == 0.0);
  }

  TEST_CASE("an inward rate is a no-op") {
    const WalkerParams params = zippy_params();
    HybridState s = standing_pose(params, Foot::Left);
    s.hip_angle = params.hard_stop_angle;
    s.hip_rate = -3.0;  // already leaving the stop
    const HybridState post = impact_hard_stop(s, params);
    CHECK(post.hip_rate == -3.0);
    CHECK_FALSE(post.stop_engaged);
  }

  TEST_CASE("plastic stop locks the joint and dissipates: randomized sweep") {
    const WalkerParams params = zippy_params();
    uint64_t rng = 77;
    for (int i = 0; i < 500; ++i) {
      HybridState pre = random_walker_state(rng, params, (i & 1) != 0);
      const int side = (mix64(rng) & 1) ? 1 : -1;
      pre.hip_angle = side * params.hard_stop_angle;
      pre.hip_rate = side * uniform(rng, 0.1, 25.0);  // outward
      const double ke_pre = kinetic_energy(pre, params);
      const HybridState post = impact_hard_stop(pre, params);
      CHECK(kinetic_energy(post, params) <= ke_pre + 1e-12);
      CHECK(post.hip_rate == 0.0);
      CHECK(post.stop_engaged);
      CHECK(post.stop_side == side);
      // Applying the map again changes nothing: the rate is no longer outward.
      const HybridState again = impact_hard_stop(post, params);
      CHECK((again.linear_velocity - post.linear_velocity).norm() == 0.0);
      CHECK((again.angular_velocity - post.angular_velocity).norm() == 0.0);
      CHECK(again.hip_rate == 0.0);
    }
  }

  TEST_CASE("elastic limit conserves kinetic energy") {
    WalkerParams params = zippy_params();
    params.hard_stop_restitution = 1.0;
    uint64_t rng = 99;
    for (int i = 0; i < 200; ++i) {
      // Flight, or stance already rolling cleanly, so the joint reversal is
      // the only impulse at work.
      HybridState pre;
      if (i & 1) {
        pre = random_walker_state(rng, params, false);
      } else {
        pre = rolling_stance_state(params, (i & 2) ? Foot::Left : Foot::Right,
                                   uniform_vec3(rng, -0.3, 0.3), 0.0,
                                   uniform_vec3(rng, -6.0, 6.0), 0.0,
                                   Vec3(0.0, 0.0, 0.0248));
      }
      const int side = (mix64(rng) & 1) ? 1 : -1;
      pre.hip_angle = side * params.hard_stop_angle;
      pre.hip_rate = side * uniform(rng, 0.5, 15.0);
      const double ke_pre = kinetic_energy(pre, params);
      const HybridState post = impact_hard_stop(pre, params);
      CHECK(kinetic_energy(post, params) ==
            doctest::Approx(ke_pre).epsilon(1e-10));
      CHECK(post.hip_rate == doctest::Approx(-pre.hip_rate).epsilon(1e-9));
      CHECK_FALSE(post.stop_engaged);
    }
  }

  TEST_CASE("two point masses on a massless rod: momentum-weighted lock") {
    // Planar hand calculation. Both bodies reduce to point masses; the stance
    // contact is pinned directly below the hip and the swing mass sits at the
    // contact's height, so the hinge lock conserves angular momentum about
    // the contact with the classic locking-flywheels answer: the common rate
    // is (m1 R1^2 w1 + m2 R2^2 w2) / (m1 R1^2 + m2 R2^2) with R_i the mass
    // distances from the contact point. Numbers below give exactly 39/16.
    WalkerParams params = zippy_params();
    params.mass_left = 0.015;
    params.mass_right = 0.010;
    params.hip_height = 0.05;
    params.foot_center_height = 0.02;
    params.foot_semi_axis_sagittal = 0.02;
    params.foot_semi_axis_frontal = 0.02;
    params.foot_semi_axis_vertical = 0.02;
    params.foot_gap = 1e-12;
    const double phi = params.hard_stop_angle;
    const Vec3 rho1(0.010, 0.0, -0.020);  // stance mass, world offset from hip
    const Vec3 rho2(0.030, 0.0, -0.050);  // swing mass, at the contact height
    params.body_com_left = rho1;
    // The swing body is rotated by +phi at impact; pre-rotate its CoM so its
    // world offset lands exactly on rho2.
    params.body_com_right = Eigen::AngleAxisd(-phi, Vec3::UnitY()) * rho2;
    const Vec3 combined = (params.mass_left * params.body_com_left +
                           params.mass_right * params.body_com_right) /
                          params.mass_total;
    params.cg_offset_x = combined.x();
    params.cg_offset_z = combined.z() + params.hip_height;
    params.body_inertia_left = 1e-13 * Mat3::Identity();
    params.body_inertia_right = 1e-13 * Mat3::Identity();
    params.validate();

    HybridState s;
    s.mode = Mode::StanceLeft;
    s.reference = Foot::Left;
    s.hip_position = Vec3(0.0, 0.0, params.hip_height);
    s.contact_height = 0.0;
    s.hip_angle = phi;
    const double w1 = 1.5, w2 = 4.0;
    s.angular_velocity = Vec3(0.0, w1, 0.0);
    s.hip_rate = w2 - w1;  // outward at the positive stop
    const Vec3 c = foot_support_world(s, Foot::Left, params) - s.hip_position;
    s.linear_velocity = -s.angular_velocity.cross(c);  // rolling before the hit

    const Vec3 contact_point = s.hip_position + c;
    const Vec3 l_pre = angular_momentum_about(s, params, contact_point);
    const double ke_pre = kinetic_energy(s, params);

    const double m1r1 = params.mass_left * (rho1 - c).squaredNorm();
    const double m2r2 = params.mass_right * (rho2 - c).squaredNorm();
    const double expected = (m1r1 * w1 + m2r2 * w2) / (m1r1 + m2r2);
    CHECK(expected == doctest::Approx(39.0 / 16.0).epsilon(1e-12));

    const HybridState post = impact_hard_stop(s, params);
    REQUIRE(post.mode == Mode::StanceLeft);  // the lock presses the foot down
    CHECK(post.angular_velocity.y() == doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(post.angular_velocity.x()) < 1e-9);
    CHECK(std::abs(post.angular_velocity.z()) < 1e-9);
    CHECK(post.hip_rate == 0.0);
    CHECK(post.stop_engaged);
    CHECK(post.stop_side == 1);

    // The contact impulse acts at the pinned point, the lock impulse is
    // internal: angular momentum about the contact survives the impact.
    CHECK((angular_momentum_about(post, params, contact_point) - l_pre).norm() < 1e-11);
    // The foot still rolls without slip afterwards.
    CHECK((post.linear_velocity + post.angular_velocity.cross(c)).norm() < 1e-12);
    CHECK(kinetic_energy(post, params) < ke_pre);
  }
}

TEST_SUITE("spoked-wheel stride map") {
  TEST_CASE("parameter validation") {
    RimlessWheelParams p;
    CHECK_NOTHROW(p.validate());
    p.spoke_length = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = RimlessWheelParams{};
    p.half_angle = -0.1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = RimlessWheelParams{};
    p.half_angle = 1.6;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = RimlessWheelParams{};
    p.slope = -0.01;
    CHECK_THROWS_AS(p.validate(), ValidationError);
  }

  TEST_CASE("level ground only dissipates: geometric decay, then rocking") {
    RimlessWheelParams p;
    p.slope = 0.0;
    const double ratio = rimless_impact_ratio(p);
    double w = 2.0;
    int completed = 0;
    for (int i = 0; i < 200; ++i) {
      const RimlessStride stride = rimless_wheel_return_map(p, w);
      if (!stride.completed) break;
      // No slope, no energy gain: each stride is a pure impact loss.
      CHECK(stride.omega_next == doctest::Approx(ratio * w).epsilon(1e-13));
      CHECK(stride.omega_next < w);
      w = stride.omega_next;
      ++completed;
    }
    CHECK(completed > 0);
    CHECK(completed < 200);  // must eventually fail the vault
    CHECK_FALSE(rimless_wheel_fixed_point(p).has_value());
  }

  TEST_CASE("degenerate smooth wheel has no impact loss") {
    RimlessWheelParams p;
    p.half_angle = 0.0;
    p.slope = 0.0;
    CHECK(rimless_impact_ratio(p) == 1.0);
    const RimlessStride stride = rimless_wheel_return_map(p, 1.7);
    CHECK(stride.completed);
    CHECK(stride.omega_next == doctest::Approx(1.7).epsilon(1e-15));
    CHECK_FALSE(rimless_wheel_fixed_point(p).has_value());
    // Any downhill grade already exceeds the zero half-angle: no stride.
    p.slope = 0.01;
    CHECK_FALSE(rimless_wheel_return_map(p, 1.7).completed);
    CHECK_FALSE(rimless_wheel_fixed_point(p).has_value());
  }

  TEST_CASE("slope at or beyond the half-angle cannot hand support forward") {
    RimlessWheelParams p;
    p.half_angle = 0.2;
    p.slope = 0.2;
    CHECK_FALSE(rimless_wheel_return_map(p, 3.0).completed);
    CHECK_FALSE(rimless_wheel_fixed_point(p).has_value());
    p.slope = 0.3;
    CHECK_FALSE(rimless_wheel_return_map(p, 3.0).completed);
  }

  TEST_CASE("the vault threshold separates rocking from rolling") {
    RimlessWheelParams p;  // 15 degrees, 3 degrees, 0.25 m
    const double threshold = 1.3095710345036384;  // sqrt(2 g / L (1 - cos 12 deg))
    CHECK_FALSE(rimless_wheel_return_map(p, 0.99 * threshold).completed);
    CHECK(rimless_wheel_return_map(p, 1.01 * threshold).completed);
    CHECK_FALSE(rimless_wheel_return_map(p, -1.0).completed);
  }

  TEST_CASE("fixed point: frozen value, closed form, and iteration agree") {
    RimlessWheelParams p;  // 15 degrees, 3 degrees, 0.25 m
    const auto fp = rimless_wheel_fixed_point(p);
    REQUIRE(fp.has_value());
    // omega*^2 = 4 g/L sin(15 deg) sin(3 deg) cos^2(30 deg) / (1 - cos^2(30 deg))
    CHECK(*fp == doctest::Approx(2.5255345810810521).epsilon(1e-12));

    // The map returns its fixed point.
    const RimlessStride at_fp = rimless_wheel_return_map(p, *fp);
    REQUIRE(at_fp.completed);
    CHECK(at_fp.omega_next == doctest::Approx(*fp).epsilon(1e-12));

    // Iteration from a spread of starts converges to the same rate.
    for (int k = 0; k < 10; ++k) {
      double w = 1.4 + 0.35 * k;
      for (int i = 0; i < 300; ++i) {
        const RimlessStride stride = rimless_wheel_return_map(p, w);
        REQUIRE(stride.completed);
        w = stride.omega_next;
      }
      CHECK(w == doctest::Approx(*fp).epsilon(1e-9));
    }

    // Local contraction rate of the map is cos^2(2 alpha).
    const double h = 1e-6;
    const double deriv = (rimless_wheel_return_map(p, *fp + h).omega_next -
                          rimless_wheel_return_map(p, *fp - h).omega_next) /
                         (2.0 * h);
    const double c = rimless_impact_ratio(p);
    CHECK(deriv == doctest::Approx(c * c).epsilon(1e-6));
  }

  TEST_CASE("contraction rate depends only on the spoke spacing") {
    RimlessWheelParams a;  // L = 0.25
    RimlessWheelParams b = a;
    b.spoke_length = 1.0;
    b.mass = 7.0;
    const auto fa = rimless_wheel_fixed_point(a);
    const auto fb = rimless_wheel_fixed_point(b);
    REQUIRE(fa.has_value());
    REQUIRE(fb.has_value());
    // Rates scale with 1/sqrt(L); the derivative does not scale at all.
    CHECK(*fb == doctest::Approx(*fa * 0.5).epsilon(1e-12));
    const double h = 1e-6;
    const auto deriv = [&](const RimlessWheelParams& p, double at) {
      return (rimless_wheel_return_map(p, at + h).omega_next -
              rimless_wheel_return_map(p, at - h).omega_next) /
             (2.0 * h);
    };
    CHECK(deriv(a, *fa) == doctest::Approx(deriv(b, *fb)).epsilon(1e-6));
  }
}

}  // namespace
