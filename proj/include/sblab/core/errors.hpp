#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sblab {

enum class ErrorKind {
  parameter,
  domain,
  singularity,
  validation,
  config,
  mass,
  geometry,
  saturation,
  non_convergence,
  conditioning,
  io,
};

/// Process exit codes used by the CLI.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::saturation:
    case ErrorKind::non_convergence:
    case ErrorKind::conditioning:
      return 3;
    case ErrorKind::io:
      return 4;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error(ErrorKind::parameter, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct SingularityError : Error {
  explicit SingularityError(const std::string& w) : Error(ErrorKind::singularity, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct MassError : Error {
  explicit MassError(const std::string& w) : Error(ErrorKind::mass, w) {}
};
struct GeometryError : Error {
  explicit GeometryError(const std::string& w) : Error(ErrorKind::geometry, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

struct SaturationError : Error {
  SaturationError(const std::string& w, std::uint64_t attempts_)
      : Error(ErrorKind::saturation, w), attempts(attempts_) {}
  std::uint64_t attempts;
};

struct NonConvergenceError : Error {
  NonConvergenceError(const std::string& w, std::vector<double> history_, double d_min_ = 0.0)
      : Error(ErrorKind::non_convergence, w), history(std::move(history_)), d_min(d_min_) {}
  std::vector<double> history;
  double d_min;
};

struct ConditioningError : Error {
  ConditioningError(const std::string& w, double condition_)
      : Error(ErrorKind::conditioning, w), condition(condition_) {}
  double condition;
};

}  // namespace sblab
