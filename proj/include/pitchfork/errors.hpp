#pragma once

#include <stdexcept>
#include <string>

namespace pitchfork {

// Numerical failures raised by the library. Configuration mistakes (bad
// sizes, invalid parameters) use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(kind) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PITCHFORK_ERROR(Name)                                    \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

PITCHFORK_ERROR(DegenerateParameters);
PITCHFORK_ERROR(NoSuchEquilibrium);
PITCHFORK_ERROR(EmptyContour);
PITCHFORK_ERROR(EmptyAdmissibleRegion);
PITCHFORK_ERROR(WrongRegime);
PITCHFORK_ERROR(NotASaddle);
PITCHFORK_ERROR(NoConvergence);
PITCHFORK_ERROR(LostEnergy);
PITCHFORK_ERROR(EnergeticallyForbidden);

#undef PITCHFORK_ERROR

}  // namespace pitchfork
