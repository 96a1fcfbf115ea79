#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace piezoq {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or argument outside the valid domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Lossless series branch evaluated exactly at its resonance (|Y| -> inf).
class SingularAdmittanceError : public Error {
 public:
  using Error::Error;
};

/// T1 requested at a point with no dissipation (Re Y <= 0).
class UndefinedLifetimeError : public Error {
 public:
  using Error::Error;
};

/// Too few samples/modes for the requested operation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A decay-rate or spectrum fit could not be performed on the given data.
class FitFailedError : public Error {
 public:
  using Error::Error;
};

/// State invariants violated beyond tolerance during ODE integration.
class IntegrationDivergedError : public Error {
 public:
  IntegrationDivergedError(const std::string& msg, double t_fail)
      : Error(msg + " at t = " + std::to_string(t_fail) + " s"), time_s_(t_fail) {}
  double failing_time_s() const { return time_s_; }

 private:
  double time_s_;
};

/// Jacobian column with no sensitivity; the offending parameter is named.
class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& msg, std::string parameter)
      : Error(msg + " (parameter: " + parameter + ")"), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

/// Loss model admits no unique piezo/TLS crossover.
class NoCrossoverError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// A bundled fixture file is missing; carries the expected path.
class FixtureNotFoundError : public Error {
 public:
  explicit FixtureNotFoundError(const std::string& path)
      : Error("fixture not found: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Non-fatal diagnostic returned alongside a result, never logged.
struct Warning {
  std::string message;
};

}  // namespace piezoq
