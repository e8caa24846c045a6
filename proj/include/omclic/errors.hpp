#pragma once

#include <stdexcept>
#include <string>

namespace omclic {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define OMCLIC_ERROR(Name)                 \
  struct Name : Error {                    \
    using Error::Error;                    \
  }

OMCLIC_ERROR(DimZero);
OMCLIC_ERROR(UpscaleUnsupported);
OMCLIC_ERROR(DimMismatch);
OMCLIC_ERROR(ZeroRowSum);
OMCLIC_ERROR(ResizerShapeMismatch);
OMCLIC_ERROR(NonFiniteObjective);
OMCLIC_ERROR(DuplicateTargetSize);
OMCLIC_ERROR(TargetNotSmaller);
OMCLIC_ERROR(ChannelMismatch);
OMCLIC_ERROR(CoeffVerificationFailed);
OMCLIC_ERROR(MinSizeViolated);
OMCLIC_ERROR(NoAdmissibleIntermediate);
OMCLIC_ERROR(TriggerTooLarge);
OMCLIC_ERROR(InsufficientDonors);
OMCLIC_ERROR(CraftFailed);
OMCLIC_ERROR(IoError);

#undef OMCLIC_ERROR

}  // namespace omclic
