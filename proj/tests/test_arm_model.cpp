#include <catch_amalgamated.hpp>

#include "reachgen/arm_model.hpp"
#include "reachgen/rng.hpp"

using namespace reachgen;
using Catch::Matchers::WithinAbs;

namespace {
const ArmParams kArm;
}

TEST_CASE("forward kinematics at reference poses") {
  Vec2 p = forward_kinematics(kArm, {0.0, 0.0});
  CHECK_THAT(p(0), WithinAbs(0.63, 1e-12));
  CHECK_THAT(p(1), WithinAbs(0.0, 1e-12));

  p = forward_kinematics(kArm, {M_PI / 2.0, 0.0});
  CHECK_THAT(p(0), WithinAbs(0.0, 1e-12));
  CHECK_THAT(p(1), WithinAbs(0.63, 1e-12));

  p = forward_kinematics(kArm, {0.0, M_PI / 2.0});
  CHECK_THAT(p(0), WithinAbs(0.30, 1e-12));
  CHECK_THAT(p(1), WithinAbs(0.33, 1e-12));
}

TEST_CASE("inverse kinematics closed form") {
  Vec2 q = inverse_kinematics(kArm, {0.63, 0.0});
  CHECK_THAT(q(0), WithinAbs(0.0, 1e-7));
  CHECK_THAT(q(1), WithinAbs(0.0, 1e-7));

  q = inverse_kinematics(kArm, {0.30, 0.33}, +1);
  CHECK_THAT(q(0), WithinAbs(0.0, 1e-12));
  CHECK_THAT(q(1), WithinAbs(M_PI / 2.0, 1e-12));

  CHECK_THROWS_AS(inverse_kinematics(kArm, {1.0, 0.0}), Unreachable);
}

TEST_CASE("FK/IK round-trip on random reachable points") {
  RngStream rng(42);
  for (int i = 0; i < 2000; ++i) {
    double r = rng.uniform(0.10, 0.60);
    double th = rng.uniform(0.0, 2.0 * M_PI);
    Vec2 p(r * std::cos(th), r * std::sin(th));
    for (int sign : {+1, -1}) {
      Vec2 q = inverse_kinematics(kArm, p, sign);
      CHECK((forward_kinematics(kArm, q) - p).norm() < 1e-10);
      if (std::abs(q(1)) > 1e-9) CHECK(q(1) * sign > 0.0);
    }
  }
}

TEST_CASE("hand-to-joint derivatives") {
  Vec2 qd, qdd;
  SECTION("rest maps to rest") {
    hand_to_joint_derivatives(kArm, {0.4, 1.1}, Vec2::Zero(), Vec2::Zero(), qd,
                              qdd);
    CHECK(qd.norm() == 0.0);
    CHECK(qdd.norm() == 0.0);
  }
  SECTION("singular configuration throws") {
    CHECK_THROWS_AS(hand_to_joint_derivatives(kArm, {0.3, 0.0}, Vec2::Zero(),
                                              Vec2::Zero(), qd, qdd),
                    SingularConfiguration);
  }
  SECTION("finite-difference velocity consistency") {
    RngStream rng(7);
    for (int i = 0; i < 50; ++i) {
      Vec2 q(rng.uniform(-1.0, 1.0), rng.uniform(0.4, 2.0));
      Vec2 v(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
      hand_to_joint_derivatives(kArm, q, v, Vec2::Zero(), qd, qdd);
      double h = 1e-6;
      Vec2 v_fd = (forward_kinematics(kArm, q + h * qd) -
                   forward_kinematics(kArm, q - h * qd)) /
                  (2.0 * h);
      CHECK((v_fd - v).norm() < 1e-6);
    }
  }
}

TEST_CASE("analytic Jacobian matches finite differences of FK") {
  RngStream rng(13);
  for (int i = 0; i < 100; ++i) {
    Vec2 q(rng.uniform(-2.0, 2.0), rng.uniform(-2.5, 2.5));
    Mat2 J = hand_jacobian(kArm, q);
    double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vec2 qp = q, qm = q;
      qp(c) += h;
      qm(c) -= h;
      Vec2 col =
          (forward_kinematics(kArm, qp) - forward_kinematics(kArm, qm)) /
          (2.0 * h);
      CHECK((J.col(c) - col).norm() < 1e-7);
    }
  }
}

TEST_CASE("inverse dynamics") {
  SECTION("no motion, no torque") {
    Vec2 tau = inverse_dynamics(kArm, {0.7, 1.3}, Vec2::Zero(), Vec2::Zero());
    CHECK(tau.norm() == 0.0);
  }
  SECTION("reference value at straight arm") {
    // a1 = 0.16, a2 = 0.048, a3 = 0.045 with the default parameters
    Vec2 tau = inverse_dynamics(kArm, Vec2::Zero(), Vec2::Zero(), {1.0, 0.0});
    CHECK_THAT(tau(0), WithinAbs(0.256, 1e-12));
    CHECK_THAT(tau(1), WithinAbs(0.093, 1e-12));
  }
}

TEST_CASE("forward dynamics inverts inverse dynamics") {
  SECTION("equilibrium") {
    Vec2 qdd = forward_dynamics(kArm, {0.5, 0.9}, Vec2::Zero(), Vec2::Zero());
    CHECK(qdd.norm() == 0.0);
  }
  SECTION("reference value") {
    Vec2 qdd =
        forward_dynamics(kArm, Vec2::Zero(), Vec2::Zero(), {0.256, 0.093});
    CHECK_THAT(qdd(0), WithinAbs(1.0, 1e-10));
    CHECK_THAT(qdd(1), WithinAbs(0.0, 1e-10));
  }
  SECTION("round-trip on random states") {
    RngStream rng(3);
    for (int i = 0; i < 1000; ++i) {
      Vec2 q(rng.uniform(-2.0, 2.0), rng.uniform(-2.5, 2.5));
      Vec2 qd(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
      Vec2 qdd(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
      Vec2 back =
          forward_dynamics(kArm, q, qd, inverse_dynamics(kArm, q, qd, qdd));
      CHECK((back - qdd).norm() < 1e-10);
    }
  }
  SECTION("affine in torque") {
    Vec2 q(0.3, 1.0), qd(0.5, -0.2), tau(0.4, -0.1);
    Vec2 base = forward_dynamics(kArm, q, qd, Vec2::Zero());
    Vec2 one = forward_dynamics(kArm, q, qd, tau);
    Vec2 two = forward_dynamics(kArm, q, qd, 2.0 * tau);
    CHECK((two - base - 2.0 * (one - base)).norm() < 1e-12);
  }
}

TEST_CASE("mass matrix symmetric positive definite over elbow range") {
  for (int i = 0; i < 100; ++i) {
    Vec2 q(0.0, -M_PI + 2.0 * M_PI * i / 99.0);
    Mat2 H = mass_matrix(kArm, q);
    CHECK(H(0, 1) == H(1, 0));
    Eigen::SelfAdjointEigenSolver<Mat2> es(H);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("activation to torque") {
  CHECK(activation_to_torque(kArm, Vec6::Zero()).norm() == 0.0);

  Vec6 antagonist;
  antagonist << 0.4, 0.4, 0.0, 0.0, 0.0, 0.0;
  CHECK(activation_to_torque(kArm, antagonist).norm() < 1e-12);

  Vec6 shoulder = Vec6::Zero();
  shoulder(0) = 1.0;
  Vec2 tau = activation_to_torque(kArm, shoulder);
  CHECK_THAT(tau(0), WithinAbs(4.0, 1e-12));
  CHECK_THAT(tau(1), WithinAbs(0.0, 1e-12));

  Vec6 bad = Vec6::Zero();
  bad(2) = 1.5;
  CHECK_THROWS_AS(activation_to_torque(kArm, bad), DomainError);
}

TEST_CASE("simulate_activations") {
  JointState x0;
  x0.q = inverse_kinematics(kArm, {0.1, 0.35});

  SECTION("rest stays at rest") {
    SimResult res =
        simulate_activations(kArm, x0, ActivationTrajectory::Zero());
    REQUIRE(res.states.size() == kNumSteps + 1);
    for (const auto& s : res.states) {
      CHECK((s.q - x0.q).norm() < 1e-15);
      CHECK(s.qd.norm() < 1e-15);
    }
    CHECK((res.final_hand - forward_kinematics(kArm, x0.q)).norm() < 1e-12);
  }

  SECTION("energy passivity with zero input") {
    JointState moving = x0;
    moving.qd = Vec2(1.5, -2.0);
    SimResult res =
        simulate_activations(kArm, moving, ActivationTrajectory::Zero());
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& s : res.states) {
      double ke = 0.5 * s.qd.dot(mass_matrix(kArm, s.q) * s.qd);
      CHECK(ke <= prev + 1e-8);
      prev = ke;
    }
  }

  SECTION("integration step refinement is converged") {
    ActivationTrajectory traj = ActivationTrajectory::Zero();
    for (int t = 0; t < kNumSteps; ++t) {
      traj(t, 0) = 0.05 + 0.02 * std::sin(0.3 * t);
      traj(t, 3) = 0.04;
    }
    SimResult coarse = simulate_activations(kArm, x0, traj, kControlDt, 0.001);
    SimResult fine = simulate_activations(kArm, x0, traj, kControlDt, 0.0005);
    CHECK((coarse.final_hand - fine.final_hand).norm() < 1e-6);
  }

  SECTION("dt_int must divide dt_ctrl") {
    CHECK_THROWS_AS(simulate_activations(kArm, x0, ActivationTrajectory::Zero(),
                                         kControlDt, 0.0003),
                    DomainError);
  }
}

TEST_CASE("arm parameter validation") {
  CHECK(kArm.validate().empty());
  ArmParams bad = kArm;
  bad.l1 = -0.1;
  CHECK_FALSE(bad.validate().empty());
  bad = kArm;
  bad.R.row(1) = bad.R.row(0);
  CHECK_FALSE(bad.validate().empty());
}
