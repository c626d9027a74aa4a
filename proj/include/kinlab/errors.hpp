#pragma once

#include <stdexcept>
#include <string>

namespace kinlab {

/// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

#define KINLAB_DEFINE_ERROR(Name)                                              \
    class Name : public Error                                                  \
    {                                                                          \
      public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}   \
    }

// geometry
KINLAB_DEFINE_ERROR(NotOnBoundary);
KINLAB_DEFINE_ERROR(DegenerateGradient);
KINLAB_DEFINE_ERROR(RootNotFound);

// collision
KINLAB_DEFINE_ERROR(NonUnitOmega);
KINLAB_DEFINE_ERROR(QuadratureNotConverged);
KINLAB_DEFINE_ERROR(SingularSeparation);
KINLAB_DEFINE_ERROR(CacheError);

// weights
KINLAB_DEFINE_ERROR(EnvelopeViolated);
KINLAB_DEFINE_ERROR(InvalidParameter);

// cycles
KINLAB_DEFINE_ERROR(GrazingAbort);
KINLAB_DEFINE_ERROR(DegenerateStep);

// solver
KINLAB_DEFINE_ERROR(WrongKind);
KINLAB_DEFINE_ERROR(Diverged);

// analysis
KINLAB_DEFINE_ERROR(InsufficientData);
KINLAB_DEFINE_ERROR(NonPositiveNorms);
KINLAB_DEFINE_ERROR(ZeroDenominator);

// configuration
KINLAB_DEFINE_ERROR(ParseError);
KINLAB_DEFINE_ERROR(ValidationError);

#undef KINLAB_DEFINE_ERROR

} // namespace kinlab
