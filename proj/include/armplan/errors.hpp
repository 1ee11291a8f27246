#pragma once

#include <stdexcept>
#include <string>

namespace armplan {

// File / config parsing problems, reported with field context.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A loaded value violates a documented invariant (negative extents, bad limits...).
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint / network shape table disagrees with the expected spec.
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// step() called on a finished episode.
struct StepAfterDone : std::logic_error {
  using std::logic_error::logic_error;
};

// Task randomization could not place a valid goal within the retry budget.
struct UnreachableTask : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace armplan
