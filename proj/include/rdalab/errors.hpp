#pragma once

#include <stdexcept>
#include <string>

namespace rdalab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NoConservationVector : public Error {
public:
  NoConservationVector() : Error("no strictly positive conservation vector exists") {}
};

class StructureViolation : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class EllipticityViolation : public Error {
public:
  using Error::Error;
};

class StepFailure : public Error {
public:
  using Error::Error;
};

class LinearSolveFailure : public Error {
public:
  using Error::Error;
};

class CollapseBoundViolation : public Error {
public:
  using Error::Error;
};

class UnknownPreset : public Error {
public:
  explicit UnknownPreset(const std::string& name) : Error("unknown preset: " + name) {}
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace rdalab
