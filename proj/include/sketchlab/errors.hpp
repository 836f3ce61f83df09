#pragma once

#include <stdexcept>
#include <string>

namespace sketchlab {

// Base of all library errors. `kind()` is a stable machine-readable tag used
// by the CLI for structured error output and exit-code selection.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Bad arguments, bad files, bad configuration. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A computation that could not be completed numerically. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define SKETCHLAB_CONFIG_ERROR(Name)                       \
  class Name : public ConfigError {                        \
   public:                                                 \
    explicit Name(const std::string& msg)                  \
        : ConfigError(#Name, msg) {}                       \
  }

#define SKETCHLAB_NUMERIC_ERROR(Name)                      \
  class Name : public NumericError {                       \
   public:                                                 \
    explicit Name(const std::string& msg)                  \
        : NumericError(#Name, msg) {}                      \
  }

SKETCHLAB_CONFIG_ERROR(DimensionMismatch);
SKETCHLAB_CONFIG_ERROR(InvalidSparsity);
SKETCHLAB_CONFIG_ERROR(ZeroDimension);
SKETCHLAB_CONFIG_ERROR(BadDimension);
SKETCHLAB_CONFIG_ERROR(MOutOfRange);
SKETCHLAB_CONFIG_ERROR(NotOrthonormal);
SKETCHLAB_CONFIG_ERROR(NotUnitNorm);
SKETCHLAB_CONFIG_ERROR(QOutOfRange);
SKETCHLAB_CONFIG_ERROR(InsufficientSamples);
SKETCHLAB_CONFIG_ERROR(UnsupportedDescriptor);
SKETCHLAB_CONFIG_ERROR(MissingInput);
SKETCHLAB_CONFIG_ERROR(EpsilonOutOfRange);
SKETCHLAB_CONFIG_ERROR(BadBlockStructure);
SKETCHLAB_CONFIG_ERROR(MissingCertificates);
SKETCHLAB_CONFIG_ERROR(IoError);
SKETCHLAB_CONFIG_ERROR(RaggedRows);
SKETCHLAB_CONFIG_ERROR(NonNumeric);
SKETCHLAB_CONFIG_ERROR(BadConfig);

SKETCHLAB_NUMERIC_ERROR(BudgetExceeded);
SKETCHLAB_NUMERIC_ERROR(NoFixedPoint);
SKETCHLAB_NUMERIC_ERROR(NonConvergence);
SKETCHLAB_NUMERIC_ERROR(CalibrationBudgetExceeded);
SKETCHLAB_NUMERIC_ERROR(ZeroResidual);

#undef SKETCHLAB_CONFIG_ERROR
#undef SKETCHLAB_NUMERIC_ERROR

}  // namespace sketchlab
