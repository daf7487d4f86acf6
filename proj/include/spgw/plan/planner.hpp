#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spgw/core/model.hpp"
#include "spgw/registry/registry.hpp"

namespace spgw::plan {

/// Tunable planner knobs. The cost weights make a 10% failure rate outweigh
/// 100 ms of latency by default.
struct PlannerConfig {
    int depth_limit = 3;
    double latency_weight = 1.0 / 100.0;
    double failure_weight = 10.0;
    double history_weight = 5.0;
};

struct Deviation {
    enum class Kind { Added, Substituted, ConstraintRelaxed };
    Kind kind = Kind::Added;
    VasKind added_kind = VasKind::Authentication;  // Added
    std::string requested_class;                   // Substituted
    std::string chosen_class;                      // Substituted
    std::string slot_id;                           // ConstraintRelaxed
    Constraint relaxed;                            // ConstraintRelaxed

    static Deviation added(VasKind k);
    static Deviation substituted(std::string requested, std::string chosen);
};

Doc deviation_to_doc(const Deviation& d);

struct PlanError {
    Errc code = Errc::UnsatisfiableSlot;
    std::string detail;
};

struct PlanOutcome {
    enum class Status { Ready, ProposalPending, Failed };
    Status status = Status::Failed;
    std::optional<Ccm> ccm;
    std::vector<Deviation> deviations;
    std::optional<PlanError> error;
    ProfileRequest request;  // the request this outcome answers

    bool ready() const { return status == Status::Ready; }
};

Doc plan_outcome_to_doc(const PlanOutcome& o);

// ---------------------------------------------------------------------------
// Pipeline stages

/// Nominal selection when the request names an architecture, otherwise the
/// architecture covering the most requested kinds whose exclusions do not
/// conflict with the request; ties broken by (category, id).
ArchitectureDescription select_adm(const ProfileRequest& request, const Snapshot& snapshot);

struct AgcmResult {
    Agcm agcm;
    std::vector<Deviation> deviations;
};

/// Orders requested kinds plus the architecture's mandatory ones into the
/// lexicographically-smallest linear extension of the architecture's partial
/// order; kinds outside the order relation follow, sorted by name.
AgcmResult build_agcm(const ProfileRequest& request, const ArchitectureDescription& adm);

struct AscmResult {
    Ascm ascm;
    std::vector<Deviation> deviations;
};

/// Binds each slot to a capability class, falling back to a nested
/// composition built from an architecture realizing the slot's kind.
AscmResult bind_ascm(const Agcm& agcm, const Snapshot& snapshot, int depth_limit);

/// Selects the cheapest feasible instance per leaf slot. Per-instance cost:
/// latency_ms/100 + 10*failure_rate + 5*min(1, client_failures/10).
Ccm bind_ccm(const Ascm& ascm, const Snapshot& snapshot, const ClientRecord& client,
             const PlannerConfig& config = {});

double instance_cost(const CapabilityDescriptor& d, const ClientRecord& client,
                     const PlannerConfig& config = {});

/// Full pipeline: select_adm -> build_agcm -> bind_ascm -> bind_ccm, caching
/// each intermediate model in the client registry.
PlanOutcome plan_profile(const ProfileRequest& request, const Snapshot& snapshot, RegistryStore& store,
                 const PlannerConfig& config = {});

struct ReviewDecision {
    bool accept = false;
    std::optional<ProfileRequest> new_request;  // replan target on reject
};

/// Resolves a ProposalPending outcome: accept it, replan with a revised
/// request, or abandon the cycle.
PlanOutcome review_ccm(const PlanOutcome& outcome, const ReviewDecision& decision,
                       RegistryStore& store, const PlannerConfig& config = {});

// ---------------------------------------------------------------------------
// Shared invariant checkers (used across module tests)

void check_agcm(const Agcm& agcm, const ArchitectureDescription& adm);  // throws on violation
void check_ascm(const Ascm& ascm, int depth_limit);
void check_ccm(const Ccm& ccm, const Snapshot& snapshot);

}  // namespace spgw::plan
