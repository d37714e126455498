#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace harvestsim {

enum class ErrorKind {
  kInfeasibleConfiguration,
  kDegenerateDiagonal,
  kNoConsistentBranch,
  kInvalidArgument,
  kNoOscillationFound,
  kUnreachable,
  kVelocityInfeasible,
  kPlacementFailed,
  kConfigInvalid,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace harvestsim
