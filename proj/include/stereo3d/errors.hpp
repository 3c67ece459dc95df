#pragma once

#include <stdexcept>
#include <string>

namespace stereo3d {

// Base class for every recoverable failure raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define STEREO3D_ERROR_TYPE(Name)                                  \
  struct Name : Error {                                            \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

// geometry / projection
STEREO3D_ERROR_TYPE(InvalidArgument);
STEREO3D_ERROR_TYPE(NonPositiveDepth);

// sparse solver
STEREO3D_ERROR_TYPE(TooFewMeasurements);
STEREO3D_ERROR_TYPE(SingularNormalEquations);
STEREO3D_ERROR_TYPE(DivergedSolve);

// dense alignment
STEREO3D_ERROR_TYPE(EmptyRoI);
STEREO3D_ERROR_TYPE(NonPositiveWarpDepth);
STEREO3D_ERROR_TYPE(AllCandidatesInvalid);

// target encoding
STEREO3D_ERROR_TYPE(DegenerateAnchor);
STEREO3D_ERROR_TYPE(NonPositiveDimension);

// evaluation
STEREO3D_ERROR_TYPE(NoGroundTruth);

// file formats
STEREO3D_ERROR_TYPE(MalformedRow);
STEREO3D_ERROR_TYPE(MissingMatrix);
STEREO3D_ERROR_TYPE(NonRectifiedPair);
STEREO3D_ERROR_TYPE(IoError);

#undef STEREO3D_ERROR_TYPE

}  // namespace stereo3d
