#pragma once

#include <stdexcept>
#include <string>

namespace lifeadd {

// Base of every error the library throws. `code()` is the stable
// machine-readable tag used by the CLI error JSON.
class error : public std::runtime_error {
 public:
  error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define LIFEADD_DEFINE_ERROR(Name)                                   \
  class Name : public error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : error(#Name, what) {}   \
  }

LIFEADD_DEFINE_ERROR(InvalidArgument);
LIFEADD_DEFINE_ERROR(InfeasibleLifetime);
LIFEADD_DEFINE_ERROR(SubUnitRegime);
LIFEADD_DEFINE_ERROR(SuperUnitRegime);
LIFEADD_DEFINE_ERROR(DegenerateBudget);
LIFEADD_DEFINE_ERROR(NoFeasiblePoint);
LIFEADD_DEFINE_ERROR(CausalityViolation);
LIFEADD_DEFINE_ERROR(UnassociatedDevice);
LIFEADD_DEFINE_ERROR(NoBeacon);
LIFEADD_DEFINE_ERROR(ParseError);
LIFEADD_DEFINE_ERROR(ValidationError);
LIFEADD_DEFINE_ERROR(AllZero);

#undef LIFEADD_DEFINE_ERROR

}  // namespace lifeadd
