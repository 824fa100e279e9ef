#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dods {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifier : public Error {
 public:
  explicit UnknownIdentifier(std::string name)
      : Error("unknown identifier '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class DomainError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class DelayOrderError : public Error { using Error::Error; };
class ManifoldError : public Error { using Error::Error; };
class BlowUpError : public Error { using Error::Error; };
class NonGraphError : public Error { using Error::Error; };
class ParamError : public Error { using Error::Error; };
class DegenerateFamilyError : public Error { using Error::Error; };
class UnknownFamily : public Error { using Error::Error; };
class CompatibilityError : public Error { using Error::Error; };
class CausalityError : public Error { using Error::Error; };
class StiffnessError : public Error { using Error::Error; };
class OutOfRange : public Error { using Error::Error; };
class NoRootFound : public Error { using Error::Error; };
class ConstraintViolated : public Error { using Error::Error; };
class NotAParticularSolution : public Error { using Error::Error; };
class NonMonotoneTransform : public Error { using Error::Error; };

}  // namespace dods
