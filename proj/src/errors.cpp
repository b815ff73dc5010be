#include "forklab/errors.hpp"

namespace forklab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateName: return "DuplicateName";
        case ErrorCode::UnknownMeasurement: return "UnknownMeasurement";
        case ErrorCode::IntegrityFailure: return "IntegrityFailure";
        case ErrorCode::CounterUnsupported: return "CounterUnsupported";
        case ErrorCode::ProgramFault: return "ProgramFault";
        case ErrorCode::NoConnections: return "NoConnections";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::DuplicateKind: return "DuplicateKind";
        case ErrorCode::BrokenChain: return "BrokenChain";
        case ErrorCode::PolicyViolation: return "PolicyViolation";
        case ErrorCode::StateMismatch: return "StateMismatch";
        case ErrorCode::BadSignature: return "BadSignature";
        case ErrorCode::RejectStale: return "RejectStale";
        case ErrorCode::RejectForkMismatch: return "RejectForkMismatch";
        case ErrorCode::NotInRange: return "NotInRange";
        case ErrorCode::NoAck: return "NoAck";
        case ErrorCode::StaleAnchor: return "StaleAnchor";
        case ErrorCode::WrongPredecessor: return "WrongPredecessor";
        case ErrorCode::DecryptFail: return "DecryptFail";
        case ErrorCode::AddressMismatch: return "AddressMismatch";
        case ErrorCode::CounterMismatch: return "CounterMismatch";
        case ErrorCode::ThrottleExceeded: return "ThrottleExceeded";
        case ErrorCode::UnregisteredEphemeralID: return "UnregisteredEphemeralID";
        case ErrorCode::AttestationFailed: return "AttestationFailed";
        case ErrorCode::MalformedMessage: return "MalformedMessage";
        case ErrorCode::Aborted: return "Aborted";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IncompleteCorpus: return "IncompleteCorpus";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

}  // namespace forklab
