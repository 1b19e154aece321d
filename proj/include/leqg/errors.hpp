#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace leqg {

// Failure classes; the CLI maps Config -> exit 2 and Numerical -> exit 3.
enum class ErrorClass { Config, Numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), cls_(cls), code_(std::move(code)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  const std::string& code() const noexcept { return code_; }

private:
  ErrorClass cls_;
  std::string code_;
};

// Bad input or configuration: ParseError, MissingKey, DimensionMismatch,
// NotPSD, ThetaOutOfRange.
struct ConfigError : Error {
  ConfigError(std::string code, const std::string& detail)
      : Error(ErrorClass::Config, std::move(code), detail) {}
};

// Failure while computing: SingularB1, SingularG, SingularSystem,
// RankDeficient, NoConvergence, GridTooCoarse, DegenerateSample, Diverged,
// ConditionsUnsatisfiable, NotScalar.
struct NumericalError : Error {
  NumericalError(std::string code, const std::string& detail)
      : Error(ErrorClass::Numerical, std::move(code), detail) {}
};

}  // namespace leqg
