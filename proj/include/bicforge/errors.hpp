#pragma once

#include <stdexcept>
#include <string>

namespace bicforge {

// Base class for all domain errors. `code()` is a stable machine-readable
// identifier used by the CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define BICFORGE_ERROR(Name)                              \
  class Name : public Error {                             \
   public:                                                \
    explicit Name(const std::string& message)             \
        : Error(#Name, message) {}                        \
  }

BICFORGE_ERROR(EmptySupport);
BICFORGE_ERROR(ProbabilitySumMismatch);
BICFORGE_ERROR(InfeasibleInstance);
BICFORGE_ERROR(NotXOS);
BICFORGE_ERROR(InvalidEpsilon);
BICFORGE_ERROR(EnumerationTooLarge);
BICFORGE_ERROR(ZeroProbabilityType);
BICFORGE_ERROR(NotDownwardClosed);
BICFORGE_ERROR(NumericFailure);
BICFORGE_ERROR(TooManyItems);
BICFORGE_ERROR(NotSingleParameter);
BICFORGE_ERROR(ParseError);
BICFORGE_ERROR(InvalidArgument);

#undef BICFORGE_ERROR

}  // namespace bicforge
