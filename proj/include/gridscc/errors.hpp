#pragma once

#include <stdexcept>

namespace gridscc {

/// A converter voltage left (or started outside) the interior of its safety
/// box, so the barrier-based controller has no certificate to offer.
struct SafetyViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical guard tripped: ill-conditioned decoupling matrix, unsolvable
/// certificate equation, or an optimizer that could not produce a verified
/// KKT point.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gridscc
