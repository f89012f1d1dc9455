#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "reachgen/errors.hpp"
#include "reachgen/types.hpp"

namespace reachgen {

// Minimum-norm activation resolution of the muscle redundancy:
//   min ||a||^2  s.t.  R a = tau,  0 <= a <= 1.
//
// The dual is 2-D and piecewise quadratic: a(lambda) = clamp(R^T lambda / 2)
// satisfies the KKT conditions for any lambda, so solving
// R a(lambda) = tau gives the exact primal optimum. A semismooth Newton
// iteration on that residual converges in a handful of steps; a brute-force
// enumeration over the 3^6 bound patterns backs it up.

namespace detail {

inline Vec6 clamp01(const Vec6& a) {
  return a.cwiseMax(0.0).cwiseMin(1.0);
}

// Exact solve by enumerating which coordinates sit at 0, at 1, or free.
inline bool enumerate_faces(const GainMatrix& R, const Vec2& tau, Vec6& best) {
  double best_obj = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int code = 0; code < 729; ++code) {
    int c = code;
    Vec6 a = Vec6::Zero();
    int free_idx[kNumMuscles];
    int nfree = 0;
    Vec2 rhs = tau;
    for (int i = 0; i < kNumMuscles; ++i) {
      int s = c % 3;
      c /= 3;
      if (s == 0) {
        // fixed at 0
      } else if (s == 1) {
        a(i) = 1.0;
        rhs -= R.col(i);
      } else {
        free_idx[nfree++] = i;
      }
    }
    if (nfree == 0) {
      if (rhs.norm() < 1e-9) {
        double obj = a.squaredNorm();
        if (obj < best_obj) { best_obj = obj; best = a; found = true; }
      }
      continue;
    }
    Eigen::MatrixXd Rf(2, nfree);
    for (int j = 0; j < nfree; ++j) Rf.col(j) = R.col(free_idx[j]);
    // minimum-norm solution on this face
    Eigen::VectorXd af =
        Rf.transpose() *
         (Rf * Rf.transpose())
             .completeOrthogonalDecomposition()
             .pseudoInverse() *
         rhs;
    if ((Rf * af - rhs).norm() > 1e-9) continue;
    bool in_box = true;
    for (int j = 0; j < nfree; ++j)
      if (af(j) < -1e-12 || af(j) > 1.0 + 1e-12) { in_box = false; break; }
    if (!in_box) continue;
    for (int j = 0; j < nfree; ++j)
      a(free_idx[j]) = std::clamp(af(j), 0.0, 1.0);
    double obj = a.squaredNorm();
    if (obj < best_obj) { best_obj = obj; best = a; found = true; }
  }
  return found;
}

}  // namespace detail

// Tests tau against the torque zonotope R [0,1]^6 via its facet normals.
inline bool torque_feasible(const GainMatrix& R, const Vec2& tau,
                            double tol = 1e-9) {
  Vec2 center = 0.5 * R.rowwise().sum();
  Vec2 d = tau - center;
  for (int i = 0; i < kNumMuscles; ++i) {
    Vec2 col = R.col(i);
    double norm = col.norm();
    if (norm < 1e-14) continue;
    Vec2 n(-col(1) / norm, col(0) / norm);
    double support = 0.0;
    for (int j = 0; j < kNumMuscles; ++j)
      support += 0.5 * std::abs(n.dot(R.col(j)));
    double proj = n.dot(d);
    if (std::abs(proj) > support + tol) return false;
  }
  return true;
}

inline Vec6 solve_activation_qp(const GainMatrix& R, const Vec2& tau) {
  if (!torque_feasible(R, tau))
    throw Infeasible("target torque outside achievable set");

  Mat2 RRt = R * R.transpose();
  Vec2 lambda = 2.0 * RRt.inverse() * tau;

  // Unconstrained minimum-norm solution; if it already lies in the box it
  // is the answer.
  Vec6 a = 0.5 * R.transpose() * lambda;
  if ((a.array() >= 0.0).all() && (a.array() <= 1.0).all()) return a;

  double scale = std::max(1.0, tau.norm());
  Vec2 F = R * detail::clamp01(a) - tau;
  for (int iter = 0; iter < 200 && F.norm() > 1e-12 * scale; ++iter) {
    Mat2 J = Mat2::Zero();
    Vec6 pre = 0.5 * R.transpose() * lambda;
    for (int i = 0; i < kNumMuscles; ++i)
      if (pre(i) > 0.0 && pre(i) < 1.0)
        J += 0.5 * R.col(i) * R.col(i).transpose();
    double det = J.determinant();
    if (std::abs(det) < 1e-14) J += 1e-10 * Mat2::Identity();
    Vec2 step = -J.inverse() * F;
    double alpha = 1.0;
    double f0 = F.norm();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      Vec2 cand = lambda + alpha * step;
      Vec2 Fc = R * detail::clamp01(0.5 * R.transpose() * cand) - tau;
      if (Fc.norm() < f0 * (1.0 - 1e-4 * alpha)) {
        lambda = cand;
        F = Fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  a = detail::clamp01(0.5 * R.transpose() * lambda);
  if ((R * a - tau).norm() < 1e-9) return a;

  Vec6 best;
  if (detail::enumerate_faces(R, tau, best)) return best;
  throw Infeasible("no activation vector achieves the target torque");
}

inline ActivationTrajectory torques_to_activations(
    const GainMatrix& R, const TorqueTrajectory& tau_traj) {
  ActivationTrajectory out;
  for (int k = 0; k < kNumSteps; ++k) {
    try {
      out.row(k) = solve_activation_qp(R, tau_traj.row(k).transpose())
                       .transpose();
    } catch (const Infeasible& e) {
      throw InfeasibleStep(k, "infeasible torque at step " +
                                  std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace reachgen
