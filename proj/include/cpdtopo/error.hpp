#pragma once

#include <stdexcept>
#include <string>

namespace cpdtopo {

/// Bad call-site input (dimensions, parameters out of range, size mismatch).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A problem definition that cannot be solved (no supports, no load, ...).
class InvalidProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// solve_sigma was handed theta == 0, where the positive root degenerates.
class DegenerateTheta : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpdtopo
