#pragma once

#include <stdexcept>
#include <string>

namespace nehari {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual)
      : Error("no convergence after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  const char* kind() const noexcept override { return "no_convergence"; }
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class NotProjectable : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "not_projectable"; }
};

class NoRoot : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "no_root"; }
};

class DegenerateComponent : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_component"; }
};

class GeometryError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "geometry"; }
};

class CoverageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "coverage"; }
};

class ZeroDenominator : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "zero_denominator"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

}  // namespace nehari
