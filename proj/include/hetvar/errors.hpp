#pragma once

#include <stdexcept>
#include <string>

namespace hetvar {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define HETVAR_DEFINE_ERROR(NAME)                       \
  struct NAME : Error {                                 \
    explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
  }

HETVAR_DEFINE_ERROR(NotSymmetric);
HETVAR_DEFINE_ERROR(IndefiniteMatrix);
HETVAR_DEFINE_ERROR(SingularMatrix);
HETVAR_DEFINE_ERROR(OrderZero);
HETVAR_DEFINE_ERROR(InvalidBreakDate);
HETVAR_DEFINE_ERROR(NonPositiveVariance);
HETVAR_DEFINE_ERROR(NotPositiveDefinite);
HETVAR_DEFINE_ERROR(UnstableModel);
HETVAR_DEFINE_ERROR(DegenerateKernel);
HETVAR_DEFINE_ERROR(EmptyGrid);
HETVAR_DEFINE_ERROR(SingularDesign);
HETVAR_DEFINE_ERROR(LagTooLarge);
HETVAR_DEFINE_ERROR(EigenvalueOutOfRange);
HETVAR_DEFINE_ERROR(SingularGamma0);
HETVAR_DEFINE_ERROR(ConvergenceFailure);
HETVAR_DEFINE_ERROR(UnstableAlternative);
HETVAR_DEFINE_ERROR(InvalidInput);

#undef HETVAR_DEFINE_ERROR

}  // namespace hetvar
