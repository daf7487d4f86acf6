#pragma once

#include <stdexcept>
#include <string>

namespace spgw {

enum class Errc {
    // core-model
    UnknownKind,
    DuplicateKind,
    EmptyRequest,
    MalformedConstraint,
    MalformedDocument,
    // registries
    DuplicateInstance,
    InvalidDescriptor,
    // predication engine
    NoAdmMatch,
    IncompleteProfile,
    ExclusionViolated,
    KindNotAllowed,
    UnsatisfiableSlot,
    DepthExceeded,
    CyclicArchitecture,
    ApprovalRequired,
    RejectedByClient,
    // sp-factory
    SetupFailed,
    ProfileConflict,
    NoProfile,
    Unavailable,
    // vo-lifecycle
    UnknownPartner,
    NoMatchingFunction,
    InvalidState,
    UnknownInvitation,
    AlreadyAnswered,
    RoleUncovered,
    PlanningFailed,
    NotAuthorized,
    // gateway
    SessionClosed,
    ProtocolViolation,
    UnknownGateway,
    Dropped,
    ConfigError,
};

const char* errc_name(Errc c);

/// Exception carrying a machine-readable error code alongside the message.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

}  // namespace spgw
