#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "spgw/core/model.hpp"

namespace spgw {

// ---------------------------------------------------------------------------
// Registry entries

/// A concrete VAS instance published into the capability registry.
struct CapabilityDescriptor {
    std::string instance_id;
    std::string class_id;  // groups instances of identical kind and offered constraints
    VasKind kind = VasKind::Authentication;
    std::string endpoint;  // simulated address
    ConstraintList offered;
    double measured_latency_ms = 1.0;
    double measured_failure_rate = 0.0;  // in [0,1]
    std::vector<SetupStep> setup_steps;
};

Doc capability_to_doc(const CapabilityDescriptor& d);
CapabilityDescriptor capability_from_doc(const Doc& d);

/// A category-scoped composition template from the architecture registry.
struct ArchitectureDescription {
    std::string id;
    std::string category;
    std::set<VasKind> mandatory;
    std::set<VasKind> optional;
    std::vector<std::pair<VasKind, VasKind>> order;  // precedes-pairs, acyclic
    std::vector<std::pair<VasKind, VasKind>> exclusions;
    std::optional<VasKind> realizes;  // set when this decomposes a single kind
};

Doc architecture_to_doc(const ArchitectureDescription& d);
ArchitectureDescription architecture_from_doc(const Doc& d);

/// Per-owner history: requests, stage cache, decisions, usage/failure counters.
struct ClientRecord {
    std::string owner_id;
    std::vector<ProfileRequest> history;
    std::map<std::string, Doc> stage_cache;  // stage-key -> serialized AGCM/ASCM/CCM
    std::vector<std::pair<std::string, bool>> decisions;  // (ccm-id, accepted)
    std::map<std::string, std::int64_t> usage_counts;     // per collaboration-id
    std::map<std::string, std::int64_t> failure_counts;   // per instance-id

    /// accepted / proposed; 1 when nothing has been proposed yet.
    double acceptance_degree() const;
};

Doc client_record_to_doc(const ClientRecord& r);
ClientRecord client_record_from_doc(const Doc& d);

// ---------------------------------------------------------------------------
// Outcome events

struct UsageEvent { std::string collaboration_id; };
struct FailureEvent { std::string instance_id; };
struct DecisionEvent { std::string ccm_id; bool accepted = false; };
struct CacheStageEvent { std::string stage_key; Doc model; };
struct RequestEvent { ProfileRequest request; };

using OutcomeEvent =
    std::variant<UsageEvent, FailureEvent, DecisionEvent, CacheStageEvent, RequestEvent>;

// ---------------------------------------------------------------------------
// Snapshot

/// Point-in-time consistent view of all three registries. Immutable; later
/// writes are invisible to holders.
struct RegistryState {
    std::map<std::string, CapabilityDescriptor> capabilities;  // by instance-id
    std::map<std::string, ArchitectureDescription> architectures;  // by id
    std::map<std::string, ClientRecord> clients;  // by owner-id
};

using Snapshot = std::shared_ptr<const RegistryState>;

/// Descriptors with matching kind whose offered constraints satisfy the
/// required list; instance-id ascending.
std::vector<CapabilityDescriptor> find_capabilities(const Snapshot& snapshot, VasKind kind,
                                                    const ConstraintList& required);

/// Architectures filtered by category and/or realizes; (category, id) ascending.
std::vector<ArchitectureDescription> find_architectures(
    const Snapshot& snapshot, const std::optional<std::string>& category,
    const std::optional<VasKind>& realizes);

std::optional<ClientRecord> find_client(const Snapshot& snapshot, const std::string& owner_id);

/// Full structured-text dump of a snapshot; byte-identical for equal states.
std::string dump_state(const RegistryState& state);

// ---------------------------------------------------------------------------
// Store

/// The three registries behind a single serialized journal appender.
/// Readers take immutable snapshots and never block writers.
class RegistryStore {
public:
    RegistryStore() : state_(std::make_shared<RegistryState>()) {}

    std::string publish_capability(const CapabilityDescriptor& descriptor);
    std::string publish_architecture(const ArchitectureDescription& description);
    ClientRecord record_outcome(const std::string& owner_id, const OutcomeEvent& event);

    Snapshot snapshot() const;

    /// Append-only journal, one structured-text record per line.
    std::vector<std::string> journal_lines() const;
    std::string journal_text() const;

    /// Rebuilds registry state by replaying a journal from empty.
    static Snapshot replay(const std::vector<std::string>& journal);

    /// Loads journal lines from a file if present, then appends new records
    /// to it on every write. Empty path keeps the journal in memory only.
    void attach_journal_file(const std::string& path);

private:
    void append(const std::string& event_type, const Doc& body);
    void apply(const std::string& event_type, const Doc& body);

    mutable std::mutex mutex_;
    std::shared_ptr<const RegistryState> state_;
    std::vector<std::string> journal_;
    std::int64_t seq_ = 0;
    std::string journal_path_;
};

void validate_capability(const CapabilityDescriptor& d);       // throws InvalidDescriptor
void validate_architecture(const ArchitectureDescription& d);  // throws InvalidDescriptor

}  // namespace spgw
