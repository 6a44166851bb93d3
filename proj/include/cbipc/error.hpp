#pragma once

#include <stdexcept>
#include <string>

namespace cbipc {

enum class ErrorCode {
    InvalidParams,
    NotApplicable,
    ConditionFails,
    ZeroTailMass,
    QuadratureFail,
    InvalidRegion,
    InvalidCertificate,
    InsufficientPaths,
    DegenerateFit,
    OutOfGrid,
    ConfigError,
};

const char* to_string(ErrorCode code);

// Every error names the config key (dotted path) it relates to, when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string config_path = {})
        : std::runtime_error(message), code_(code), config_path_(std::move(config_path)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& config_path() const noexcept { return config_path_; }

private:
    ErrorCode code_;
    std::string config_path_;
};

}  // namespace cbipc
