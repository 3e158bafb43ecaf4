#pragma once

#include <stdexcept>
#include <string>

namespace morph {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Iterative solver stopped before reaching its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string &what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const noexcept { return worst_residual_; }

 private:
  double worst_residual_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class MeshTaggingError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

enum class ValidationKind {
  kSchema,
  kInvalidGeometry,
  kBoundaryOffDomain,
  kNoStates,
  kInvalidValue,
};

// Problem document failed validation. `path()` is a JSON pointer to the
// offending field.
class ValidationError : public Error {
 public:
  ValidationError(ValidationKind kind, std::string path, const std::string &msg)
      : Error(path + ": " + msg), kind_(kind), path_(std::move(path)), message_(msg) {}
  ValidationKind kind() const noexcept { return kind_; }
  const std::string &path() const noexcept { return path_; }
  const std::string &message() const noexcept { return message_; }

 private:
  ValidationKind kind_;
  std::string path_;
  std::string message_;
};

}  // namespace morph
