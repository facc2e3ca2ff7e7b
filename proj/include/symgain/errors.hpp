#pragma once

#include <stdexcept>
#include <string>

namespace symgain {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// gain algebra
struct NotInvertible : Error { using Error::Error; };
struct ChiNotAdmissible : Error { using Error::Error; };

// geometry / grids
struct StepTooLarge : Error { using Error::Error; };
struct EmptyGrid : Error { using Error::Error; };
struct OutsideDomain : Error { using Error::Error; };
struct NotOnGrid : Error { using Error::Error; };

// interconnection
struct DimensionMismatch : Error { using Error::Error; };
struct ContainmentViolated : Error { using Error::Error; };

// certificates
struct TuningInvalid : Error { using Error::Error; };
struct NotSymmetric : Error { using Error::Error; };
struct NotPD : Error { using Error::Error; };
struct LmiFails : Error { using Error::Error; };

// abstraction
struct CapacityExceeded : Error { using Error::Error; };

// composition
struct SmallGainViolated : Error { using Error::Error; };
struct OmegaPathFails : Error { using Error::Error; };

// synthesis
struct EmptyWinningSet : Error {
  explicit EmptyWinningSet(const std::string& msg, std::size_t iter)
      : Error(msg), iteration(iter) {}
  std::size_t iteration;
};
struct OutsideWinningDomain : Error { using Error::Error; };

// cli / config
struct ConfigError : Error { using Error::Error; };

}  // namespace symgain
