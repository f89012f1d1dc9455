#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "reachgen/ilqg.hpp"
#include "reachgen/rng.hpp"

using namespace reachgen;

namespace {

// Frictionless 1-D double integrator with exact discrete dynamics, for
// checking the solver against closed forms.
class DoubleIntegrator {
 public:
  using VecX = Eigen::Vector2d;
  using VecU = Eigen::Matrix<double, 1, 1>;

  DoubleIntegrator(double dt, double wp, double wv, double wu)
      : dt_(dt), wp_(wp), wv_(wv), wu_(wu) {}

  VecX step(const VecX& x, const VecU& u) const {
    return {x(0) + dt_ * x(1) + 0.5 * dt_ * dt_ * u(0), x(1) + dt_ * u(0)};
  }

  double running_cost(const VecU& u, int) const {
    return wu_ * u(0) * u(0) * dt_;
  }
  VecU running_grad(const VecU& u, int) const {
    return VecU{2.0 * wu_ * dt_ * u(0)};
  }
  Eigen::Matrix<double, 1, 1> running_hess(int) const {
    return Eigen::Matrix<double, 1, 1>{2.0 * wu_ * dt_};
  }

  double terminal_cost(const VecX& x) const {
    return wp_ * x(0) * x(0) + wv_ * x(1) * x(1);
  }
  VecX terminal_grad(const VecX& x) const {
    return {2.0 * wp_ * x(0), 2.0 * wv_ * x(1)};
  }
  Eigen::Matrix2d terminal_hess(const VecX&) const {
    Eigen::Matrix2d H;
    H << 2.0 * wp_, 0.0, 0.0, 2.0 * wv_;
    return H;
  }

  Eigen::Matrix2d A() const {
    Eigen::Matrix2d a;
    a << 1.0, dt_, 0.0, 1.0;
    return a;
  }
  Eigen::Vector2d B() const { return {0.5 * dt_ * dt_, dt_}; }

 private:
  double dt_, wp_, wv_, wu_;
};

const ArmParams kArm;

IlqgConfig tight_reg_config() {
  IlqgConfig cfg;
  cfg.reg_init = 1e-12;
  cfg.reg_min = 1e-12;
  return cfg;
}

}  // namespace

TEST_CASE("finite-difference linearization of a linear plant is exact") {
  DoubleIntegrator plant(0.02, 1e3, 1e1, 1e-2);
  IlqgConfig cfg = tight_reg_config();
  cfg.dt = 0.02;
  IlqrSolver<2, 1, DoubleIntegrator> solver(plant, cfg);

  Eigen::Matrix2d A;
  Eigen::Vector2d B;
  Eigen::Matrix<double, 2, 1> Bm;
  Eigen::Matrix<double, 2, 2> Am;
  solver.linearize({0.3, -0.1}, Eigen::Matrix<double, 1, 1>{0.5}, Am, Bm);
  CHECK((Am - plant.A()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((Bm - plant.B()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("arm linearization sanity") {
  JointState x;
  x.q = {0.4, 1.2};
  x.qd = {0.3, -0.5};
  Eigen::Matrix<double, 4, 4> A, A2;
  Eigen::Matrix<double, 4, 2> B, B2;
  linearize_step(kArm, x, {0.1, -0.2}, kControlDt, A, B, 1e-6);
  CHECK(A.allFinite());
  CHECK(B.allFinite());
  CHECK(B.cwiseAbs().maxCoeff() > 0.0);
  // torque must affect the velocity states within one step
  CHECK(B.bottomRows<2>().cwiseAbs().maxCoeff() > 1e-3);

  linearize_step(kArm, x, {0.1, -0.2}, kControlDt, A2, B2, 5e-7);
  CHECK((A - A2).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("one iteration on a linear-quadratic problem matches Riccati") {
  const double dt = 0.02;
  const int N = 50;
  DoubleIntegrator plant(dt, 1e3, 1e1, 1e-2);
  IlqgConfig cfg = tight_reg_config();
  cfg.dt = dt;
  cfg.horizon = N;
  cfg.max_iter = 1;
  IlqrSolver<2, 1, DoubleIntegrator> solver(plant, cfg);

  Eigen::Vector2d x0(0.15, 0.0);
  auto res = solver.solve(x0, std::vector<Eigen::Matrix<double, 1, 1>>(
                                  N, Eigen::Matrix<double, 1, 1>::Zero()));

  Eigen::Matrix2d Qf;
  Qf << 2.0 * 1e3, 0.0, 0.0, 2.0 * 1e1;
  Eigen::Matrix<double, 1, 1> Ru{2.0 * 1e-2 * dt};
  auto u_lqr = oracles::lqr_controls(plant.A(), plant.B(), Qf, Ru, x0, N);

  REQUIRE(res.controls.size() == static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k)
    CHECK(std::abs(res.controls[k](0) - u_lqr[k](0)) < 1e-6);
}

TEST_CASE("zero-length reach needs no control") {
  ReachPair pair{{0.05, 0.35}, {0.05, 0.35}};
  IlqgSolution sol = ilqg_solve(kArm, pair);
  CHECK(sol.converged);
  CHECK(sol.controls.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(sol.cost_history.back() < 1e-10);
}

TEST_CASE("cost of a motionless rollout is the endpoint term exactly") {
  IlqgConfig cfg;
  Vec2 target(0.12, 0.40);
  ReachPair pair{{0.05, 0.35}, target};
  Vec2 q0 = inverse_kinematics(kArm, pair.start);
  ArmReachProblem prob(kArm, target, cfg);
  IlqrSolver<4, 2, ArmReachProblem> solver(prob, cfg);
  Eigen::Matrix<double, 4, 1> x0;
  x0 << q0, Vec2::Zero();
  std::vector<Eigen::Matrix<double, 4, 1>> xs;
  double cost = solver.rollout(x0, std::vector<Vec2>(cfg.horizon, Vec2::Zero()),
                               xs);
  double expected = cfg.w_p * (pair.start - target).squaredNorm();
  CHECK(std::abs(cost - expected) < 1e-12 * std::max(1.0, expected));

  SECTION("effort term scales linearly in its weight") {
    std::vector<Vec2> u(cfg.horizon, Vec2(0.1, -0.05));
    double c1 = solver.rollout(x0, u, xs);
    IlqgConfig cfg2 = cfg;
    cfg2.w_u *= 2.0;
    ArmReachProblem prob2(kArm, target, cfg2);
    IlqrSolver<4, 2, ArmReachProblem> solver2(prob2, cfg2);
    double c2 = solver2.rollout(x0, u, xs);
    double effort = cfg.w_u * cfg.horizon * Vec2(0.1, -0.05).squaredNorm() *
                    cfg.dt;
    CHECK(std::abs((c2 - c1) - effort) < 1e-9);
  }
}

TEST_CASE("sampled reaches converge with monotone cost") {
  RngStream rng(11);
  for (int i = 0; i < 10; ++i) {
    ReachPair pair;
    pair.start = {rng.uniform(-0.2, 0.2), rng.uniform(0.27, 0.43)};
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    double dist = rng.uniform(0.02, 0.10);
    pair.end = pair.start + dist * Vec2(std::cos(angle), std::sin(angle));
    if (pair.end.norm() < 0.16 || pair.end.norm() > 0.57) continue;

    IlqgSolution sol = ilqg_solve(kArm, pair);
    Vec2 endpoint = forward_kinematics(kArm, sol.states.back().q);
    CHECK((endpoint - pair.end).norm() < 2e-3);
    for (std::size_t k = 1; k < sol.cost_history.size(); ++k)
      CHECK(sol.cost_history[k] < sol.cost_history[k - 1]);
  }
}

TEST_CASE("determinism of repeated solves") {
  ReachPair pair{{-0.1, 0.3}, {-0.05, 0.38}};
  IlqgSolution a = ilqg_solve(kArm, pair);
  IlqgSolution b = ilqg_solve(kArm, pair);
  CHECK((a.controls - b.controls).norm() == 0.0);
  CHECK(a.cost_history == b.cost_history);
}

TEST_CASE("unreachable endpoints are rejected") {
  CHECK_THROWS_AS(ilqg_solve(kArm, ReachPair{{0.05, 0.35}, {2.0, 0.0}}),
                  Unreachable);
  CHECK_THROWS_AS(ilqg_solve(kArm, ReachPair{{2.0, 0.0}, {0.05, 0.35}}),
                  Unreachable);
}
