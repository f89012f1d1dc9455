#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reachgen/arm_model.hpp"
#include "reachgen/errors.hpp"
#include "reachgen/types.hpp"

namespace reachgen {

struct IlqgConfig {
  int horizon = kNumSteps;
  double dt = kControlDt;
  double w_p = 1e4;   // endpoint position weight
  double w_v = 1e2;   // terminal velocity weight
  double w_u = 1e-2;  // control effort weight
  double reg_init = 1.0;
  double reg_min = 1e-9;
  double reg_max = 1e10;
  int max_iter = 100;
  double tol_rel = 1e-9;
  int n_alphas = 11;  // line search over alpha = 2^0 .. 2^-(n-1)
  double fd_h = 1e-6;

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    if (horizon < 1) errs.push_back("ilqg horizon must be >= 1");
    if (dt <= 0.0) errs.push_back("ilqg dt must be > 0");
    if (w_p < 0.0 || w_v < 0.0 || w_u < 0.0)
      errs.push_back("ilqg weights must be >= 0");
    if (!(reg_min <= reg_init && reg_init <= reg_max))
      errs.push_back("ilqg regularization bounds must satisfy reg_min <= reg_init <= reg_max");
    if (max_iter < 1) errs.push_back("ilqg max_iter must be >= 1");
    return errs;
  }
};

// Trajectory optimizer over a discrete-time problem with control-only
// running cost. The Problem supplies the one-step map and cost terms;
// dynamics derivatives come from central finite differences of that map.
template <int NX, int NU, class Problem>
class IlqrSolver {
 public:
  using VecX = Eigen::Matrix<double, NX, 1>;
  using VecU = Eigen::Matrix<double, NU, 1>;
  using MatXX = Eigen::Matrix<double, NX, NX>;
  using MatXU = Eigen::Matrix<double, NX, NU>;
  using MatUX = Eigen::Matrix<double, NU, NX>;
  using MatUU = Eigen::Matrix<double, NU, NU>;

  struct Result {
    std::vector<VecU> controls;
    std::vector<VecX> states;  // horizon+1
    std::vector<double> cost_history;
    bool converged = false;
    std::string message;
  };

  IlqrSolver(const Problem& prob, const IlqgConfig& cfg)
      : prob_(prob), cfg_(cfg) {}

  double rollout(const VecX& x0, const std::vector<VecU>& u,
                 std::vector<VecX>& xs) const {
    const int N = cfg_.horizon;
    xs.resize(N + 1);
    xs[0] = x0;
    double cost = 0.0;
    for (int k = 0; k < N; ++k) {
      cost += prob_.running_cost(u[k], k);
      xs[k + 1] = prob_.step(xs[k], u[k]);
      if (!xs[k + 1].allFinite() || xs[k + 1].cwiseAbs().maxCoeff() > 1e6)
        throw NumericalBlowup("rollout diverged at step " + std::to_string(k));
    }
    return cost + prob_.terminal_cost(xs[N]);
  }

  void linearize(const VecX& x, const VecU& u, MatXX& A, MatXU& B) const {
    const double h = cfg_.fd_h;
    for (int i = 0; i < NX; ++i) {
      VecX xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      A.col(i) = (prob_.step(xp, u) - prob_.step(xm, u)) / (2.0 * h);
    }
    for (int i = 0; i < NU; ++i) {
      VecU up = u, um = u;
      up(i) += h;
      um(i) -= h;
      B.col(i) = (prob_.step(x, up) - prob_.step(x, um)) / (2.0 * h);
    }
  }

  Result solve(const VecX& x0, std::vector<VecU> u) const {
    const int N = cfg_.horizon;
    Result res;
    std::vector<VecX> xs;
    double cost = rollout(x0, u, xs);
    res.cost_history.push_back(cost);

    double reg = cfg_.reg_init;
    std::vector<VecU> kff(N);
    std::vector<MatUX> K(N);
    std::vector<MatXX> A(N);
    std::vector<MatXU> B(N);

    for (int iter = 0; iter < cfg_.max_iter; ++iter) {
      for (int k = 0; k < N; ++k) linearize(xs[k], u[k], A[k], B[k]);

      bool accepted = false;
      std::vector<VecX> xs_new;
      std::vector<VecU> u_new(N);
      double cost_new = cost;

      while (!accepted) {
        double exp_dec = backward_pass(xs, u, A, B, reg, kff, K);
        if (exp_dec <= cfg_.tol_rel * std::max(1.0, std::abs(cost))) {
          res.converged = true;
          break;
        }

        double alpha = 1.0;
        for (int a = 0; a < cfg_.n_alphas; ++a, alpha *= 0.5) {
          double c;
          std::vector<VecX> xt(N + 1);
          xt[0] = x0;
          c = 0.0;
          bool blew_up = false;
          for (int k = 0; k < N; ++k) {
            u_new[k] = u[k] + alpha * kff[k] + K[k] * (xt[k] - xs[k]);
            c += prob_.running_cost(u_new[k], k);
            xt[k + 1] = prob_.step(xt[k], u_new[k]);
            if (!xt[k + 1].allFinite() ||
                xt[k + 1].cwiseAbs().maxCoeff() > 1e6) {
              blew_up = true;
              break;
            }
          }
          if (blew_up) continue;
          c += prob_.terminal_cost(xt[N]);
          if (c < cost) {
            accepted = true;
            cost_new = c;
            xs_new = std::move(xt);
            break;
          }
        }
        if (!accepted) {
          reg *= 10.0;
          if (reg > cfg_.reg_max) {
            res.controls = u;
            res.states = xs;
            res.message = "line search failed at maximum regularization";
            return res;
          }
        }
      }
      if (res.converged) break;

      double decrease = cost - cost_new;
      cost = cost_new;
      xs = std::move(xs_new);
      for (int k = 0; k < N; ++k) u[k] = u_new[k];
      res.cost_history.push_back(cost);
      reg = std::max(cfg_.reg_min, reg / 10.0);

      if (decrease <= cfg_.tol_rel * std::max(1.0, std::abs(cost))) {
        res.converged = true;
        break;
      }
    }

    res.controls = std::move(u);
    res.states = std::move(xs);
    if (!res.converged)
      res.message = "iteration limit reached before relative tolerance";
    return res;
  }

 private:
  // Returns the predicted cost decrease for a full (alpha = 1) step.
  double backward_pass(const std::vector<VecX>& xs, const std::vector<VecU>& u,
                       const std::vector<MatXX>& A, const std::vector<MatXU>& B,
                       double reg, std::vector<VecU>& kff,
                       std::vector<MatUX>& K) const {
    const int N = cfg_.horizon;
    double exp_dec = 0.0;
    VecX Vx = prob_.terminal_grad(xs[N]);
    MatXX Vxx = prob_.terminal_hess(xs[N]);
    for (int k = N - 1; k >= 0; --k) {
      VecU Qu = prob_.running_grad(u[k], k) + B[k].transpose() * Vx;
      MatXX Qxx = A[k].transpose() * Vxx * A[k];
      MatUU Quu = prob_.running_hess(k) + B[k].transpose() * Vxx * B[k];
      MatUX Qux = B[k].transpose() * Vxx * A[k];
      VecX Qx = A[k].transpose() * Vx;

      MatUU Quu_reg = Quu + reg * MatUU::Identity();
      Eigen::SelfAdjointEigenSolver<MatUU> es(Quu_reg);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw NumericalBlowup("regularized control Hessian not PD");
      Eigen::LLT<MatUU> llt(Quu_reg);

      kff[k] = -llt.solve(Qu);
      K[k] = -llt.solve(Qux);
      exp_dec += -Qu.dot(kff[k]) - 0.5 * kff[k].dot(Quu_reg * kff[k]);

      Vx = Qx + K[k].transpose() * Quu * kff[k] + K[k].transpose() * Qu +
           Qux.transpose() * kff[k];
      Vxx = Qxx + K[k].transpose() * Quu * K[k] + K[k].transpose() * Qux +
            Qux.transpose() * K[k];
      Vxx = 0.5 * (Vxx + Vxx.transpose());
    }
    return exp_dec;
  }

  const Problem& prob_;
  IlqgConfig cfg_;
};

// Reaching problem for the two-link arm: state (q, qd), controls are joint
// torques, one RK4 step per 0.02 s control interval.
class ArmReachProblem {
 public:
  using VecX = Eigen::Matrix<double, 4, 1>;
  using MatXX = Eigen::Matrix<double, 4, 4>;

  ArmReachProblem(const ArmParams& arm, const Vec2& target,
                  const IlqgConfig& cfg)
      : arm_(arm), target_(target), cfg_(cfg) {}

  VecX step(const VecX& x, const Vec2& u) const {
    JointState s{x.head<2>(), x.tail<2>()};
    JointState n = rk4_step(arm_, s, u, cfg_.dt);
    VecX out;
    out << n.q, n.qd;
    return out;
  }

  double running_cost(const Vec2& u, int) const {
    return cfg_.w_u * u.squaredNorm() * cfg_.dt;
  }
  Vec2 running_grad(const Vec2& u, int) const {
    return 2.0 * cfg_.w_u * cfg_.dt * u;
  }
  Mat2 running_hess(int) const {
    return 2.0 * cfg_.w_u * cfg_.dt * Mat2::Identity();
  }

  double terminal_cost(const VecX& x) const {
    Vec2 e = forward_kinematics(arm_, x.head<2>()) - target_;
    return cfg_.w_p * e.squaredNorm() + cfg_.w_v * x.tail<2>().squaredNorm();
  }

  VecX terminal_grad(const VecX& x) const {
    Vec2 q = x.head<2>();
    Vec2 e = forward_kinematics(arm_, q) - target_;
    Mat2 J = hand_jacobian(arm_, q);
    VecX g;
    g.head<2>() = 2.0 * cfg_.w_p * J.transpose() * e;
    g.tail<2>() = 2.0 * cfg_.w_v * x.tail<2>();
    return g;
  }

  MatXX terminal_hess(const VecX& x) const {
    Vec2 q = x.head<2>();
    Vec2 e = forward_kinematics(arm_, q) - target_;
    Mat2 J = hand_jacobian(arm_, q);
    double c1 = std::cos(q(0)), s1 = std::sin(q(0));
    double c12 = std::cos(q(0) + q(1)), s12 = std::sin(q(0) + q(1));
    Mat2 Hx, Hy;  // second derivatives of hand x and y w.r.t. q
    Hx << -arm_.l1 * c1 - arm_.l2 * c12, -arm_.l2 * c12,
          -arm_.l2 * c12,               -arm_.l2 * c12;
    Hy << -arm_.l1 * s1 - arm_.l2 * s12, -arm_.l2 * s12,
          -arm_.l2 * s12,               -arm_.l2 * s12;
    MatXX H = MatXX::Zero();
    H.topLeftCorner<2, 2>() =
        2.0 * cfg_.w_p * (J.transpose() * J + e(0) * Hx + e(1) * Hy);
    H.bottomRightCorner<2, 2>() = 2.0 * cfg_.w_v * Mat2::Identity();
    return H;
  }

 private:
  const ArmParams& arm_;
  Vec2 target_;
  IlqgConfig cfg_;
};

// Discrete one-step linearization of the arm reach dynamics (central
// differences, matching the solver's internal derivative path).
inline void linearize_step(const ArmParams& arm, const JointState& x,
                           const Vec2& u, double dt,
                           Eigen::Matrix<double, 4, 4>& A,
                           Eigen::Matrix<double, 4, 2>& B, double h = 1e-6) {
  IlqgConfig cfg;
  cfg.dt = dt;
  cfg.fd_h = h;
  ArmReachProblem prob(arm, Vec2::Zero(), cfg);
  IlqrSolver<4, 2, ArmReachProblem> solver(prob, cfg);
  Eigen::Matrix<double, 4, 1> xv;
  xv << x.q, x.qd;
  solver.linearize(xv, u, A, B);
}

struct IlqgSolution {
  TorqueTrajectory controls = TorqueTrajectory::Zero();
  std::vector<JointState> states;  // horizon+1
  std::vector<double> cost_history;
  bool converged = false;
  std::string message;
};

inline IlqgSolution ilqg_solve(const ArmParams& arm, const ReachPair& pair,
                               const IlqgConfig& cfg = {}) {
  Vec2 q0 = inverse_kinematics(arm, pair.start);
  // target must be reachable before optimizing toward it
  (void)inverse_kinematics(arm, pair.end);

  ArmReachProblem prob(arm, pair.end, cfg);
  IlqrSolver<4, 2, ArmReachProblem> solver(prob, cfg);
  Eigen::Matrix<double, 4, 1> x0;
  x0 << q0, Vec2::Zero();
  auto res = solver.solve(x0, std::vector<Vec2>(cfg.horizon, Vec2::Zero()));

  IlqgSolution sol;
  for (int k = 0; k < cfg.horizon && k < kNumSteps; ++k)
    sol.controls.row(k) = res.controls[k].transpose();
  sol.states.reserve(res.states.size());
  for (const auto& x : res.states)
    sol.states.push_back(JointState{x.head<2>(), x.tail<2>()});
  sol.cost_history = std::move(res.cost_history);
  sol.converged = res.converged;
  sol.message = std::move(res.message);
  return sol;
}

}  // namespace reachgen
