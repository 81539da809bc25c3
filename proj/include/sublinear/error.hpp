#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sublinear {

enum class ErrorKind {
    InvalidArgument,
    SingularOperator,
    WeightNotAdmissible,
    NoConvergence,
    NotASubsolution,
    NotASupersolution,
    BracketViolated,
    ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::SingularOperator: return "SingularOperator";
        case ErrorKind::WeightNotAdmissible: return "WeightNotAdmissible";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::NotASubsolution: return "NotASubsolution";
        case ErrorKind::NotASupersolution: return "NotASupersolution";
        case ErrorKind::BracketViolated: return "BracketViolated";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the lab in particular) can map it to a row status or exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace sublinear
