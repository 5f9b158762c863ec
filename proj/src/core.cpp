#include "vasim/core.hpp"

namespace vasim {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::PastDeadline: return "PastDeadline";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::UnknownSkill: return "UnknownSkill";
    case ErrorCode::OversizeResponse: return "OversizeResponse";
    case ErrorCode::VectorUnavailable: return "VectorUnavailable";
    case ErrorCode::FvvNotCapable: return "FvvNotCapable";
    case ErrorCode::PlanOrderError: return "PlanOrderError";
    case ErrorCode::NoAttackerStream: return "NoAttackerStream";
    case ErrorCode::MicMuted: return "MicMuted";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace vasim
