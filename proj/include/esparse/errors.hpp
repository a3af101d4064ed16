#pragma once

#include <stdexcept>
#include <string>

namespace esparse {

// Every failure mode that callers are expected to handle gets its own type.
// The `code()` string is stable and machine-readable; the CLI maps it into
// error JSON, so renaming a code is a breaking change.

class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

#define ESPARSE_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                        \
  public:                                                            \
    explicit NAME(const std::string& msg) : Error(#NAME, msg) {}     \
  }

ESPARSE_DEFINE_ERROR(NonPositiveWeight);
ESPARSE_DEFINE_ERROR(SelfLoop);
ESPARSE_DEFINE_ERROR(VertexOutOfRange);
ESPARSE_DEFINE_ERROR(Disconnected);
ESPARSE_DEFINE_ERROR(InfeasibleParameters);
ESPARSE_DEFINE_ERROR(ParseError);
ESPARSE_DEFINE_ERROR(NotPSD);
ESPARSE_DEFINE_ERROR(DimensionMismatch);
ESPARSE_DEFINE_ERROR(NoConvergence);
ESPARSE_DEFINE_ERROR(NotEulerian);
ESPARSE_DEFINE_ERROR(PreconditionViolated);
ESPARSE_DEFINE_ERROR(DegenerateConstraint);
ESPARSE_DEFINE_ERROR(QualityNotMet);
ESPARSE_DEFINE_ERROR(NotBipartiteLift);
ESPARSE_DEFINE_ERROR(NotIrreducible);
ESPARSE_DEFINE_ERROR(InvalidArgument);
ESPARSE_DEFINE_ERROR(IoError);

#undef ESPARSE_DEFINE_ERROR

}  // namespace esparse
