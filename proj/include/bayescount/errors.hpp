#pragma once

#include <stdexcept>
#include <string>

namespace bayescount {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
struct io_error : error {
  using error::error;
};

/// File exists but its contents do not match the expected format.
struct parse_error : error {
  using error::error;
};

/// A value or shape violates a documented invariant or precondition.
struct validation_error : error {
  using error::error;
};

/// The query pixel coincides with its nearest head, so the dummy background
/// point has no defined direction. Callers should use the distance form of
/// the background likelihood instead, which never needs the direction.
struct degenerate_direction_error : error {
  using error::error;
};

}  // namespace bayescount
