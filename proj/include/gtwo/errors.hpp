#pragma once

#include <stdexcept>
#include <string>

namespace gtwo {

/// Error classes map one-to-one onto CLI exit codes.
enum class ErrorClass { usage = 2, parse = 3, non_convergence = 4, domain = 5 };

class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, const std::string &what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

private:
  ErrorClass cls_;
};

class ParseError : public Error {
public:
  ParseError(const std::string &what, int line = 0)
      : Error(ErrorClass::parse,
              line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

class ConvergenceError : public Error {
public:
  explicit ConvergenceError(const std::string &what)
      : Error(ErrorClass::non_convergence, what) {}
};

class DomainError : public Error {
public:
  explicit DomainError(const std::string &what)
      : Error(ErrorClass::domain, what) {}
};

class UnitError : public DomainError {
public:
  explicit UnitError(const std::string &what) : DomainError(what) {}
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string &what)
      : Error(ErrorClass::usage, what) {}
};

} // namespace gtwo
