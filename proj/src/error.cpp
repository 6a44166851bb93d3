#include "cbipc/error.hpp"

namespace cbipc {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::NotApplicable: return "NotApplicable";
        case ErrorCode::ConditionFails: return "ConditionFails";
        case ErrorCode::ZeroTailMass: return "ZeroTailMass";
        case ErrorCode::QuadratureFail: return "QuadratureFail";
        case ErrorCode::InvalidRegion: return "InvalidRegion";
        case ErrorCode::InvalidCertificate: return "InvalidCertificate";
        case ErrorCode::InsufficientPaths: return "InsufficientPaths";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::OutOfGrid: return "OutOfGrid";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace cbipc
