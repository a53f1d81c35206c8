#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A distribution or transform parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the domain of a transform family (e.g. y <= -c).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The amplified objective value would overflow a double.
class OverflowError : public Error {
 public:
  OverflowError(const std::string& what, double theta, double y)
      : Error(what), theta_(theta), y_(y) {}

  double theta() const { return theta_; }
  double y() const { return y_; }

 private:
  double theta_;
  double y_;
};

/// Numerical integration did not reach the requested accuracy.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}

  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// Invalid or inconsistent configuration. `path` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// An optimization run stopped before its horizon.
class RunAborted : public Error {
 public:
  RunAborted(std::size_t step, const std::string& what)
      : Error("aborted at step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace promot
