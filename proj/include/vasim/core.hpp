#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace vasim {

/// Simulation time in milliseconds since simulation start.
using Millis = std::int64_t;

/// JSON type used throughout; ordered so serialized output is byte-stable.
using Json = nlohmann::ordered_json;

/// Event-log schema version, stamped on every log line.
inline constexpr int kLogSchemaVersion = 1;

enum class ErrorCode {
    PastDeadline,
    InvalidProbability,
    ParseError,
    BudgetTooSmall,
    UnknownCommand,
    UnknownSkill,
    OversizeResponse,
    VectorUnavailable,
    FvvNotCapable,
    PlanOrderError,
    NoAttackerStream,
    MicMuted,
    ValidationError,
    IoError,
};

/// Error type for all contract violations; carries a machine-readable code.
class SimError : public std::runtime_error {
public:
    SimError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

const char* to_string(ErrorCode code);

} // namespace vasim
