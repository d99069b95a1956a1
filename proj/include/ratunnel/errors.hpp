#pragma once

#include <stdexcept>
#include <string>

namespace ratunnel {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define RATUNNEL_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                                  \
  public:                                                                      \
    using Error::Error;                                                        \
    const char* kind() const noexcept override { return #Name; }               \
  }

// model
RATUNNEL_DEFINE_ERROR(UnsupportedOrder);
RATUNNEL_DEFINE_ERROR(DegenerateModel);
RATUNNEL_DEFINE_ERROR(ConfigError);

// classical
RATUNNEL_DEFINE_ERROR(NoReturn);
RATUNNEL_DEFINE_ERROR(NoTorus);
RATUNNEL_DEFINE_ERROR(SeparatrixProximity);
RATUNNEL_DEFINE_ERROR(OpenContour);
RATUNNEL_DEFINE_ERROR(OutOfRange);

// complexpath
RATUNNEL_DEFINE_ERROR(EscapeDetected);
RATUNNEL_DEFINE_ERROR(StepFailure);
RATUNNEL_DEFINE_ERROR(NoConvergence);
RATUNNEL_DEFINE_ERROR(WrongBranch);
RATUNNEL_DEFINE_ERROR(BranchCollision);

// quantum
RATUNNEL_DEFINE_ERROR(SolverFailure);
RATUNNEL_DEFINE_ERROR(PoorLocalization);

// semiclassics
RATUNNEL_DEFINE_ERROR(NoRoot);
RATUNNEL_DEFINE_ERROR(PeakSingularity);
RATUNNEL_DEFINE_ERROR(ResonantDenominator);

#undef RATUNNEL_DEFINE_ERROR

} // namespace ratunnel
