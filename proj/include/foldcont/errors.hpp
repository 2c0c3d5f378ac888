#pragma once

#include <stdexcept>
#include <string>

namespace foldcont {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FOLDCONT_ERROR(Name)                  \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

FOLDCONT_ERROR(DomainError);
FOLDCONT_ERROR(ConfigError);
FOLDCONT_ERROR(DegenerateMapError);
FOLDCONT_ERROR(SingularJacobian);
FOLDCONT_ERROR(NoConvergence);
FOLDCONT_ERROR(SingularBordered);
FOLDCONT_ERROR(EigSolverFailure);
FOLDCONT_ERROR(BracketError);
FOLDCONT_ERROR(InsufficientSamples);
FOLDCONT_ERROR(NotAFold);
FOLDCONT_ERROR(BlowupError);
FOLDCONT_ERROR(StepFailure);

#undef FOLDCONT_ERROR

}  // namespace foldcont
