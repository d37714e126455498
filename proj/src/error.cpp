#include "harvestsim/error.hpp"

namespace harvestsim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInfeasibleConfiguration: return "InfeasibleConfiguration";
    case ErrorKind::kDegenerateDiagonal: return "DegenerateDiagonal";
    case ErrorKind::kNoConsistentBranch: return "NoConsistentBranch";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kNoOscillationFound: return "NoOscillationFound";
    case ErrorKind::kUnreachable: return "Unreachable";
    case ErrorKind::kVelocityInfeasible: return "VelocityInfeasible";
    case ErrorKind::kPlacementFailed: return "PlacementFailed";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace harvestsim
