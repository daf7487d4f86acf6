#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spgw/core/error.hpp"

namespace spgw {

/// All structured-text documents in the system are UTF-8 key/value trees
/// with lists; ordered_json keeps field order stable for byte-identical
/// serialization.
using Doc = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Vocabulary

/// Closed vocabulary of value-adding service kinds. Unknown tags are
/// rejected at parse time everywhere.
enum class VasKind {
    PolicyEnforcement,
    Authentication,
    Authorisation,
    Audit,
    Billing,
    Translation,
    Monitoring,
    TokenIssuance,
    TokenValidation,
};

const std::vector<VasKind>& all_vas_kinds();
std::string to_string(VasKind kind);
VasKind vas_kind_from_string(const std::string& tag);  // throws UnknownKind
std::optional<VasKind> try_vas_kind(const std::string& tag);

enum class Placement { Request, Response, Both };

std::string to_string(Placement p);
Placement placement_from_string(const std::string& tag);

/// True when `offered` handles every message direction `required` names.
bool placement_covers(Placement offered, Placement required);

// ---------------------------------------------------------------------------
// Constraints

enum class ConstraintKind {
    QosMaxLatencyMs,
    QosMinThroughputRps,
    Semantics,
    PlacementKind,
};

struct Constraint {
    ConstraintKind kind;
    std::int64_t bound = 0;          // QosMaxLatencyMs / QosMinThroughputRps
    std::string semantics_tag;       // Semantics (opaque policy-language tag)
    Placement placement = Placement::Both;  // PlacementKind

    static Constraint max_latency_ms(std::int64_t ms);
    static Constraint min_throughput_rps(std::int64_t rps);
    static Constraint semantics(std::string tag);
    static Constraint of_placement(Placement p);

    bool operator==(const Constraint&) const = default;
};

using ConstraintList = std::vector<Constraint>;

Doc constraint_to_doc(const Constraint& c);
Constraint constraint_from_doc(const Doc& d);  // throws MalformedConstraint
Doc constraints_to_doc(const ConstraintList& cs);
ConstraintList constraints_from_doc(const Doc& d);

/// True iff the offered constraints satisfy every required one: offered
/// latency bound <= required, offered throughput >= required, the semantics
/// tag sets intersect, and the offered placement covers the required one.
/// An empty required list is vacuously satisfied.
bool constraint_satisfies(const ConstraintList& offered, const ConstraintList& required);

// ---------------------------------------------------------------------------
// Profile requests

enum class AdaptabilityLevel { Open, Guarded, Locked };

std::string to_string(AdaptabilityLevel level);
AdaptabilityLevel adaptability_from_string(const std::string& tag);

struct WantedEntry {
    VasKind kind;
    ConstraintList constraints;

    bool operator==(const WantedEntry&) const = default;
};

struct ProfileRequest {
    std::string owner_id;
    std::string resource_id;
    std::vector<WantedEntry> wanted;  // ordered as submitted, no duplicate kinds
    Placement direction = Placement::Both;
    AdaptabilityLevel adaptability = AdaptabilityLevel::Guarded;
    std::optional<std::pair<std::string, std::string>> preferred_architecture;  // (category, name)

    bool operator==(const ProfileRequest&) const = default;
};

/// Parses and normalizes an external profile-request document. Fills the
/// defaults (placement=both, adaptability=Guarded) and enforces every type
/// invariant of ProfileRequest.
ProfileRequest validate_profile_request(const Doc& document);
Doc profile_request_to_doc(const ProfileRequest& request);

// ---------------------------------------------------------------------------
// Composition models

enum class SlotOrigin { ClientRequested, SystemAdded };

std::string to_string(SlotOrigin o);

struct AgcmSlot {
    std::string slot_id;
    VasKind kind;
    ConstraintList constraints;
    SlotOrigin origin = SlotOrigin::ClientRequested;

    bool operator==(const AgcmSlot&) const = default;
};

/// Abstract Generic Composition Model: ordered abstract slots validated
/// against an architecture description.
struct Agcm {
    std::string adm_ref;
    std::vector<AgcmSlot> slots;

    bool operator==(const Agcm&) const = default;
};

struct Ascm;

/// A slot binding: either a capability class or a nested composition.
struct AscmBinding {
    std::string capability_class;  // empty when nested
    std::shared_ptr<Ascm> nested;  // null when direct

    bool is_nested() const { return nested != nullptr; }
};

/// Abstract Specific Composition Model: the AGCM with every slot bound to a
/// capability class or a nested ASCM.
struct Ascm {
    Agcm agcm;
    std::map<std::string, AscmBinding> bindings;  // keyed by slot-id
};

bool ascm_equal(const Ascm& a, const Ascm& b);

struct InstanceBinding {
    std::string instance_id;
    std::string endpoint;

    bool operator==(const InstanceBinding&) const = default;
};

enum class SetupStepKind { TrustBootstrap, ConfigPush, None };

std::string to_string(SetupStepKind k);

struct SetupStep {
    SetupStepKind kind = SetupStepKind::None;
    std::string peer_ref;  // TrustBootstrap
    Doc document;          // ConfigPush
    Doc params;

    bool operator==(const SetupStep& o) const {
        return kind == o.kind && peer_ref == o.peer_ref && document == o.document &&
               params == o.params;
    }
};

struct PlannedSetupStep {
    std::string slot_path;
    std::string instance_id;
    SetupStep step;

    bool operator==(const PlannedSetupStep&) const = default;
};

/// Concrete Composition Model: the ASCM with a concrete instance chosen per
/// leaf slot, the aggregated setup plan, and the selection cost.
struct Ccm {
    Ascm ascm;
    std::map<std::string, InstanceBinding> instance_bindings;  // keyed by leaf slot path
    std::vector<PlannedSetupStep> setup_plan;                  // chain order
    double score = 0.0;
};

bool ccm_equal(const Ccm& a, const Ccm& b);

/// Leaf slot paths of an ASCM in chain order (depth-first, nested slots
/// expanded in place). Paths join slot ids with '/'.
struct LeafSlot {
    std::string path;
    std::string slot_id;
    VasKind kind;
    ConstraintList constraints;
    std::string capability_class;
};

std::vector<LeafSlot> leaf_slots(const Ascm& ascm);

Doc agcm_to_doc(const Agcm& m);
Agcm agcm_from_doc(const Doc& d);
Doc ascm_to_doc(const Ascm& m);
Ascm ascm_from_doc(const Doc& d);
Doc ccm_to_doc(const Ccm& m);
Ccm ccm_from_doc(const Doc& d);

/// Content hash over the serialized CCM; keys idempotent re-enactment.
std::uint64_t ccm_content_hash(const Ccm& m);

// ---------------------------------------------------------------------------
// Secured profiles

/// Timestamps are logical ticks (the simulation has no wall clock).
using Tick = std::int64_t;

struct ScheduleWindow {
    Tick start = 0;  // inclusive
    Tick end = 0;    // exclusive

    bool contains(Tick t) const { return t >= start && t < end; }
    bool operator==(const ScheduleWindow&) const = default;
};

enum class LifecycleMode { Eager, Scheduled, OnDemand };

std::string to_string(LifecycleMode m);

struct LifecyclePolicy {
    LifecycleMode mode = LifecycleMode::Eager;
    std::vector<ScheduleWindow> windows;  // Scheduled only

    bool operator==(const LifecyclePolicy&) const = default;
};

enum class ProfileState { Validated, Enacted, Active, Dormant, Latent, Retired };

std::string to_string(ProfileState s);

// ---------------------------------------------------------------------------
// Message envelopes

enum class Direction { Request, Response };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& tag);

struct MessageEnvelope {
    std::string collaboration_id;
    Direction direction = Direction::Request;
    std::map<std::string, std::string> headers;  // includes token, sender-role
    std::string payload;                         // opaque bytes

    bool operator==(const MessageEnvelope&) const = default;
};

Doc envelope_to_doc(const MessageEnvelope& e);
MessageEnvelope envelope_from_doc(const Doc& d);

/// Collaboration ids must be non-empty [A-Za-z0-9._:-]+ before broker dispatch.
bool collaboration_id_well_formed(const std::string& id);

/// FNV-1a over a byte string; used for content hashes and report digests.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace spgw
