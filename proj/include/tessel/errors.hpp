#pragma once

#include <stdexcept>
#include <string>

namespace tessel {

// Root of every error this library throws. Callers that only need a message
// catch this; the CLI maps the concrete subclasses onto exit codes.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define TESSEL_DEFINE_ERROR(name)                                            \
  class name : public error {                                                \
  public:                                                                    \
    explicit name(const std::string& what) : error(#name ": " + what) {}     \
  }

TESSEL_DEFINE_ERROR(DegeneratePolygon);
TESSEL_DEFINE_ERROR(InvalidPolygon);
TESSEL_DEFINE_ERROR(TileSetError);
TESSEL_DEFINE_ERROR(SupersetTooLarge);
TESSEL_DEFINE_ERROR(CapacityExceeded);
TESSEL_DEFINE_ERROR(NotNeighbors);
TESSEL_DEFINE_ERROR(PoseTableIncomplete);
TESSEL_DEFINE_ERROR(EmptyGraph);
TESSEL_DEFINE_ERROR(ConfigMismatch);
TESSEL_DEFINE_ERROR(NoTape);
TESSEL_DEFINE_ERROR(WeightFormatError);
TESSEL_DEFINE_ERROR(GenerationFailed);
TESSEL_DEFINE_ERROR(NoCandidates);
TESSEL_DEFINE_ERROR(ParseError);
TESSEL_DEFINE_ERROR(VersionError);
TESSEL_DEFINE_ERROR(InvariantViolation);

#undef TESSEL_DEFINE_ERROR

}  // namespace tessel
