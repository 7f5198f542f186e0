#pragma once

#include <stdexcept>
#include <string>

namespace nvcharge {

// Every error raised by the library derives from Error. The category decides
// the CLI exit status (validation 2, convergence 3, io 4).
enum class ErrorCategory { validation, convergence, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class UndefinedStationaryState : public Error {
 public:
  UndefinedStationaryState()
      : Error(ErrorCategory::validation,
              "stationary state undefined: k_ion + k_rec must be positive") {}
};

class RebinningError : public Error {
 public:
  explicit RebinningError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class InsufficientEvents : public Error {
 public:
  explicit InsufficientEvents(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class DegenerateData : public Error {
 public:
  explicit DegenerateData(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorCategory::validation,
              source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TruncationError : public Error {
 public:
  TruncationError(double tail_mass, const std::string& what)
      : Error(ErrorCategory::convergence, what), tail_mass_(tail_mass) {}
  double tail_mass() const noexcept { return tail_mass_; }

 private:
  double tail_mass_;
};

class QuadratureError : public Error {
 public:
  QuadratureError(double achieved, double requested)
      : Error(ErrorCategory::convergence,
              "quadrature did not converge: achieved relative error " +
                  std::to_string(achieved) + ", requested " + std::to_string(requested)),
        achieved_(achieved) {}
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class RangeNotFound : public Error {
 public:
  explicit RangeNotFound(const std::string& what)
      : Error(ErrorCategory::convergence, what) {}
};

// Carries whatever the optimizer had when it gave up; Payload is the
// module-specific result type.
template <typename Payload>
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Payload best)
      : Error(ErrorCategory::convergence, what), best_(std::move(best)) {}
  const Payload& best_so_far() const noexcept { return best_; }

 private:
  Payload best_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

}  // namespace nvcharge
