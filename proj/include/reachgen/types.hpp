#pragma once

#include <Eigen/Dense>

namespace reachgen {

inline constexpr int kNumSteps = 50;    // control steps per reach
inline constexpr int kNumMuscles = 6;
inline constexpr int kNumJoints = 2;
inline constexpr double kControlDt = 0.02;  // s, 50 Hz control grid
inline constexpr double kReachDuration = 1.0;  // s

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using GainMatrix = Eigen::Matrix<double, 2, 6>;  // activation -> joint torque

// One row per control step, time-major when flattened.
using ActivationTrajectory = Eigen::Matrix<double, kNumSteps, kNumMuscles>;
using TorqueTrajectory = Eigen::Matrix<double, kNumSteps, kNumJoints>;

struct JointState {
  Vec2 q = Vec2::Zero();   // joint angles, rad
  Vec2 qd = Vec2::Zero();  // joint velocities, rad/s
};

struct HandKinematics {
  Vec2 p = Vec2::Zero();  // m
  Vec2 v = Vec2::Zero();  // m/s
  Vec2 a = Vec2::Zero();  // m/s^2
};

struct ReachPair {
  Vec2 start = Vec2::Zero();  // m
  Vec2 end = Vec2::Zero();    // m
};

}  // namespace reachgen
