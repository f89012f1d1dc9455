#pragma once

#include <stdexcept>
#include <string>

namespace reachgen {

struct Unreachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleStep : std::runtime_error {
  int step;
  InfeasibleStep(int k, const std::string& what)
      : std::runtime_error(what), step(k) {}
};

struct NumericalBlowup : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChecksumMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace reachgen
