#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "reachgen/errors.hpp"
#include "reachgen/types.hpp"

namespace reachgen {

// Planar two-link, six-muscle arm. Horizontal plane, so no gravity terms.
// Muscles act through a constant activation-to-torque gain matrix R.
struct ArmParams {
  double l1 = 0.30, l2 = 0.33;    // link lengths, m
  double m1 = 1.4, m2 = 1.0;      // link masses, kg
  double I1 = 0.025, I2 = 0.045;  // link inertias about COM, kg m^2
  double s1 = 0.11, s2 = 0.16;    // COM distances from proximal joint, m
  Mat2 B = (Mat2() << 0.05, 0.025, 0.025, 0.05).finished();  // joint viscosity
  // columns: shoulder flex/ext, elbow flex/ext, biarticular flex/ext
  GainMatrix R = (GainMatrix() << 4.0, -4.0, 0.0, 0.0, 2.8, -3.5,
                                  0.0, 0.0, 2.5, -2.5, 2.8, -3.5).finished();

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    auto positive = [&](double v, const char* name) {
      if (!(v > 0.0)) errs.push_back(std::string(name) + " must be > 0");
    };
    positive(l1, "l1"); positive(l2, "l2");
    positive(m1, "m1"); positive(m2, "m2");
    positive(I1, "I1"); positive(I2, "I2");
    positive(s1, "s1"); positive(s2, "s2");
    if (s1 > l1) errs.push_back("s1 must be <= l1");
    if (s2 > l2) errs.push_back("s2 must be <= l2");
    if (std::abs(B(0, 1) - B(1, 0)) > 1e-12)
      errs.push_back("B must be symmetric");
    // PSD for a symmetric 2x2: nonnegative diagonal and determinant
    if (B(0, 0) < 0.0 || B(1, 1) < 0.0 ||
        B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0) < -1e-12)
      errs.push_back("B must be positive semidefinite");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
    if (svd.singularValues()(1) < 1e-9)
      errs.push_back("R must have full row rank 2");
    return errs;
  }

  double max_reach() const { return l1 + l2; }
  double min_reach() const { return std::abs(l1 - l2); }
};

inline Vec2 forward_kinematics(const ArmParams& arm, const Vec2& q) {
  double c1 = std::cos(q(0)), s1 = std::sin(q(0));
  double c12 = std::cos(q(0) + q(1)), s12 = std::sin(q(0) + q(1));
  return {arm.l1 * c1 + arm.l2 * c12, arm.l1 * s1 + arm.l2 * s12};
}

// Analytic hand Jacobian dp/dq.
inline Mat2 hand_jacobian(const ArmParams& arm, const Vec2& q) {
  double s1 = std::sin(q(0)), c1 = std::cos(q(0));
  double s12 = std::sin(q(0) + q(1)), c12 = std::cos(q(0) + q(1));
  Mat2 J;
  J << -arm.l1 * s1 - arm.l2 * s12, -arm.l2 * s12,
        arm.l1 * c1 + arm.l2 * c12,  arm.l2 * c12;
  return J;
}

// Time derivative of the Jacobian along (q, qd).
inline Mat2 hand_jacobian_dot(const ArmParams& arm, const Vec2& q,
                              const Vec2& qd) {
  double c1 = std::cos(q(0)), s1 = std::sin(q(0));
  double c12 = std::cos(q(0) + q(1)), s12 = std::sin(q(0) + q(1));
  double w1 = qd(0), w12 = qd(0) + qd(1);
  Mat2 Jd;
  Jd << -arm.l1 * c1 * w1 - arm.l2 * c12 * w12, -arm.l2 * c12 * w12,
        -arm.l1 * s1 * w1 - arm.l2 * s12 * w12, -arm.l2 * s12 * w12;
  return Jd;
}

// Closed-form 2R inverse kinematics; elbow_sign picks the branch of q2.
inline Vec2 inverse_kinematics(const ArmParams& arm, const Vec2& p,
                               int elbow_sign = +1) {
  double r2 = p.squaredNorm();
  double r = std::sqrt(r2);
  if (r > arm.max_reach() + 1e-12 || r < arm.min_reach() - 1e-12)
    throw Unreachable("hand position out of workspace: r=" + std::to_string(r));
  double cq2 = (r2 - arm.l1 * arm.l1 - arm.l2 * arm.l2) /
               (2.0 * arm.l1 * arm.l2);
  cq2 = std::clamp(cq2, -1.0, 1.0);
  double q2 = (elbow_sign >= 0 ? 1.0 : -1.0) * std::acos(cq2);
  double q1 = std::atan2(p(1), p(0)) -
              std::atan2(arm.l2 * std::sin(q2), arm.l1 + arm.l2 * std::cos(q2));
  return {q1, q2};
}

// Maps hand-space velocity/acceleration to joint-space ones through the
// Jacobian. Throws near the fully extended/folded singularity.
inline void hand_to_joint_derivatives(const ArmParams& arm, const Vec2& q,
                                      const Vec2& v, const Vec2& a,
                                      Vec2& qd, Vec2& qdd) {
  Mat2 J = hand_jacobian(arm, q);
  double det = J.determinant();
  if (std::abs(det) <= 1e-8)
    throw SingularConfiguration("hand Jacobian singular, |det J|=" +
                                std::to_string(std::abs(det)));
  Mat2 Jinv;
  Jinv << J(1, 1), -J(0, 1), -J(1, 0), J(0, 0);
  Jinv /= det;
  qd = Jinv * v;
  qdd = Jinv * (a - hand_jacobian_dot(arm, q, qd) * qd);
}

inline Mat2 mass_matrix(const ArmParams& arm, const Vec2& q) {
  double a1 = arm.I1 + arm.I2 + arm.m2 * arm.l1 * arm.l1;
  double a2 = arm.m2 * arm.l1 * arm.s2;
  double a3 = arm.I2;
  double c2 = std::cos(q(1));
  Mat2 H;
  H << a1 + 2.0 * a2 * c2, a3 + a2 * c2,
       a3 + a2 * c2,       a3;
  return H;
}

inline Vec2 coriolis_vector(const ArmParams& arm, const Vec2& q,
                            const Vec2& qd) {
  double a2 = arm.m2 * arm.l1 * arm.s2;
  double s2 = std::sin(q(1));
  return {-a2 * s2 * qd(1) * (2.0 * qd(0) + qd(1)),
           a2 * s2 * qd(0) * qd(0)};
}

inline Vec2 inverse_dynamics(const ArmParams& arm, const Vec2& q,
                             const Vec2& qd, const Vec2& qdd) {
  return mass_matrix(arm, q) * qdd + coriolis_vector(arm, q, qd) + arm.B * qd;
}

inline Vec2 forward_dynamics(const ArmParams& arm, const Vec2& q,
                             const Vec2& qd, const Vec2& tau) {
  Mat2 H = mass_matrix(arm, q);
  Vec2 rhs = tau - coriolis_vector(arm, q, qd) - arm.B * qd;
  // H is SPD for valid params; solve by explicit 2x2 inverse
  double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
  return {(H(1, 1) * rhs(0) - H(0, 1) * rhs(1)) / det,
          (H(0, 0) * rhs(1) - H(1, 0) * rhs(0)) / det};
}

inline Vec2 activation_to_torque(const ArmParams& arm, const Vec6& act) {
  for (int i = 0; i < kNumMuscles; ++i)
    if (act(i) < -1e-9 || act(i) > 1.0 + 1e-9)
      throw DomainError("activation " + std::to_string(i) +
                        " out of [0,1]: " + std::to_string(act(i)));
  return arm.R * act;
}

// One RK4 step of the torque-driven dynamics.
inline JointState rk4_step(const ArmParams& arm, const JointState& x,
                           const Vec2& tau, double dt) {
  auto deriv = [&](const JointState& s) {
    JointState d;
    d.q = s.qd;
    d.qd = forward_dynamics(arm, s.q, s.qd, tau);
    return d;
  };
  auto advance = [](const JointState& s, const JointState& d, double h) {
    JointState r;
    r.q = s.q + h * d.q;
    r.qd = s.qd + h * d.qd;
    return r;
  };
  JointState k1 = deriv(x);
  JointState k2 = deriv(advance(x, k1, 0.5 * dt));
  JointState k3 = deriv(advance(x, k2, 0.5 * dt));
  JointState k4 = deriv(advance(x, k3, dt));
  JointState out;
  out.q = x.q + (dt / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
  out.qd = x.qd + (dt / 6.0) * (k1.qd + 2.0 * k2.qd + 2.0 * k3.qd + k4.qd);
  return out;
}

struct SimResult {
  std::vector<JointState> states;  // kNumSteps+1 entries, control grid
  Vec2 final_hand = Vec2::Zero();
};

// Drives the arm with zero-order-hold activations on the control grid,
// integrating at dt_int inside each control step.
inline SimResult simulate_activations(const ArmParams& arm,
                                      const JointState& x0,
                                      const ActivationTrajectory& traj,
                                      double dt_ctrl = kControlDt,
                                      double dt_int = 0.001) {
  int substeps = static_cast<int>(std::lround(dt_ctrl / dt_int));
  if (substeps < 1 || std::abs(substeps * dt_int - dt_ctrl) > 1e-12)
    throw DomainError("dt_int must divide dt_ctrl");
  SimResult res;
  res.states.reserve(kNumSteps + 1);
  res.states.push_back(x0);
  JointState x = x0;
  for (int k = 0; k < kNumSteps; ++k) {
    Vec2 tau = activation_to_torque(arm, traj.row(k).transpose());
    for (int s = 0; s < substeps; ++s) x = rk4_step(arm, x, tau, dt_int);
    if (x.q.cwiseAbs().maxCoeff() > 1e6 || x.qd.cwiseAbs().maxCoeff() > 1e6 ||
        !x.q.allFinite() || !x.qd.allFinite())
      throw NumericalBlowup("state diverged at control step " +
                            std::to_string(k));
    res.states.push_back(x);
  }
  res.final_hand = forward_kinematics(arm, x.q);
  return res;
}

}  // namespace reachgen
