#pragma once

#include <vector>

#include "reachgen/errors.hpp"
#include "reachgen/types.hpp"

namespace reachgen {

// Straight-line hand path with the quintic minimum-jerk time profile.
struct MinJerkSpec {
  Vec2 p0 = Vec2::Zero();
  Vec2 pf = Vec2::Zero();
  double T = kReachDuration;  // s
  int n = kNumSteps;          // sample count
};

inline HandKinematics minjerk_point(const MinJerkSpec& spec, double t) {
  if (t < -1e-12 || t > spec.T + 1e-12)
    throw DomainError("minjerk time outside [0,T]");
  double s = t / spec.T;
  double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  double sigma = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
  double dsigma = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
  double ddsigma = 60.0 * s - 180.0 * s2 + 120.0 * s3;
  Vec2 d = spec.pf - spec.p0;
  HandKinematics h;
  h.p = spec.p0 + d * sigma;
  h.v = d * (dsigma / spec.T);
  h.a = d * (ddsigma / (spec.T * spec.T));
  return h;
}

// Samples at t_k = (k+1) T / n for k = 0..n-1. The grid excludes t=0 (the
// known rest start) and includes t=T.
inline std::vector<HandKinematics> sample_minjerk(const MinJerkSpec& spec) {
  if (spec.T <= 0.0) throw DomainError("minjerk duration must be > 0");
  if (spec.n < 2) throw DomainError("minjerk sample count must be >= 2");
  std::vector<HandKinematics> out;
  out.reserve(spec.n);
  for (int k = 0; k < spec.n; ++k)
    out.push_back(minjerk_point(spec, (k + 1) * spec.T / spec.n));
  return out;
}

}  // namespace reachgen
