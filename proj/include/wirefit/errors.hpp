#pragma once

#include <stdexcept>
#include <string>

namespace wirefit {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

// A camera-frame point whose projective denominator fell at or below the
// depth guard. keypoint_index is -1 when the point is not part of a skeleton.
struct DepthSingularityError : Error {
  int keypoint_index;
  explicit DepthSingularityError(int index)
      : Error("depth singularity at keypoint " + std::to_string(index)),
        keypoint_index(index) {}
};

struct DegenerateInputError : Error {
  using Error::Error;
};

struct RejectionExhaustedError : Error {
  using Error::Error;
};

struct TrainingDivergedError : Error {
  double last_finite_loss;
  explicit TrainingDivergedError(double last_loss)
      : Error("training diverged; last finite loss = " + std::to_string(last_loss)),
        last_finite_loss(last_loss) {}
};

}  // namespace wirefit
