#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dictdescent {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// non-finite or otherwise unusable numeric input
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class UndefinedDirection : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class UnsupportedExponent : public Error {
 public:
  using Error::Error;
};

// s < p + 1 and similar contradictions between declared constants
class InconsistentAssumptions : public Error {
 public:
  using Error::Error;
};

class EllipticityViolated : public Error {
 public:
  using Error::Error;
};

class NormingImpossible : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class DictionaryDegenerate : public Error {
 public:
  DictionaryDegenerate(const std::string& what, std::vector<std::size_t> atoms)
      : Error(what), atoms_(std::move(atoms)) {}
  const std::vector<std::size_t>& atoms() const { return atoms_; }

 private:
  std::vector<std::size_t> atoms_;
};

}  // namespace dictdescent
