#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "spgw/core/model.hpp"

namespace spgw::vo {

enum class VoState { Empty, Configured, Inviting, Federated, Virtualized, Operational, Adapting, Dissolved };

std::string to_string(VoState s);

enum class InvitationStatus { Invited, Accepted, Declined };

/// One step of the collaborative process: who does what.
struct ProcessStep {
    std::string role;
    std::string business_function;

    bool operator==(const ProcessStep&) const = default;
};

struct BusinessCard {
    std::string partner_id;
    std::string role;        // infrastructure-provider | content-provider | operator | vas-provider
    std::string fip_ref;     // identity-provider identifier
    std::string public_key;  // simulated key material

    bool operator==(const BusinessCard&) const = default;
};

Doc business_card_to_doc(const BusinessCard& c);
BusinessCard business_card_from_doc(const Doc& d);

struct RosterEntry {
    std::string role;
    std::string profile_ref;  // chosen VAS profile, set on Accept
    InvitationStatus status = InvitationStatus::Invited;
    bool flagged = false;  // planning failed during federation
};

using FipEdge = std::pair<std::string, std::string>;  // normalized: first < second

struct VoRecord {
    std::string vo_id;
    std::string initiator;
    std::string vhe_ref;
    VoState state = VoState::Empty;
    std::vector<ProcessStep> process;
    std::map<std::string, RosterEntry> roster;  // partner-id -> entry; includes the initiator
    std::vector<BusinessCard> business_cards;
    std::set<FipEdge> trust_edges;
    std::map<std::string, std::string> collaboration_ids;  // partner-id -> collaboration-id
};

Doc vo_record_to_doc(const VoRecord& r);

// ---------------------------------------------------------------------------

/// Gateway-side effects the lifecycle machine drives. The production
/// implementation sends protocol frames; tests substitute an in-memory fake.
class VoHost {
public:
    virtual ~VoHost() = default;

    virtual bool partner_registered(const std::string& partner_id) const = 0;
    virtual std::vector<std::string> business_functions(const std::string& partner_id) const = 0;
    virtual BusinessCard business_card(const std::string& partner_id) const = 0;

    /// Hands the invited provider the process and interaction description.
    virtual void deliver_process_view(const std::string& partner_id, const std::string& vo_id,
                                      const Doc& process_view) = 0;
    virtual void distribute_cards(const std::string& partner_id, const std::string& vo_id,
                                  const std::vector<BusinessCard>& cards) = 0;
    /// Simulated mutual key exchange, recorded at both partners' gateways.
    virtual void establish_trust(const BusinessCard& a, const BusinessCard& b) = 0;
    virtual void revoke_trust(const BusinessCard& a, const BusinessCard& b) = 0;
    virtual void push_policies(const std::string& partner_id, const std::string& collaboration_id,
                               const Doc& policy) = 0;

    /// Resolves a partner's named profile, plans it and enacts the result
    /// under the collaboration-id. Throws on planning or setup failure.
    virtual void enact_profile(const std::string& partner_id, const std::string& collaboration_id,
                               const std::string& profile_ref) = 0;
    virtual void swap_profile(const std::string& partner_id, const std::string& collaboration_id,
                              const ProfileRequest& request) = 0;
    virtual void retire_profile(const std::string& partner_id,
                                const std::string& collaboration_id) = 0;
};

// ---------------------------------------------------------------------------

struct NewProfile {
    std::string partner_id;
    ProfileRequest request;
};
struct MemberJoin {
    std::string provider_id;
    std::string profile_ref;
};
struct MemberLeave {
    std::string partner_id;
};
using VoChange = std::variant<NewProfile, MemberJoin, MemberLeave>;

/// Federation state machine for the VOs hosted at one gateway. Operations on
/// one VO are serialized; distinct VOs are independent.
class VoManager {
public:
    explicit VoManager(VoHost& host) : host_(host) {}

    VoRecord create_vo(const std::string& vo_id, const std::string& initiator,
                       const std::string& vhe_ref);
    VoRecord attach_process(const std::string& vo_id, std::vector<ProcessStep> process);
    std::string invite(const std::string& vo_id, const std::string& provider_id);
    VoRecord respond_invitation(const std::string& invitation_id, bool accept,
                                const std::string& profile_ref = "");
    VoRecord finalize_federation(const std::string& vo_id);
    VoRecord adapt_vo(const std::string& vo_id, const std::string& initiator_id,
                      const VoChange& change);
    VoRecord dissolve(const std::string& vo_id);

    VoRecord record(const std::string& vo_id) const;
    std::vector<std::string> vo_ids() const;

private:
    struct Invitation {
        std::string vo_id;
        std::string provider_id;
        bool answered = false;
    };

    VoRecord& require(const std::string& vo_id);
    std::vector<std::string> members(const VoRecord& vo) const;  // accepted, sorted
    void federate_member(VoRecord& vo, const std::string& partner_id);

    VoHost& host_;
    mutable std::mutex mutex_;
    std::map<std::string, VoRecord> vos_;
    std::map<std::string, Invitation> invitations_;
    std::int64_t next_invitation_ = 1;
};

}  // namespace spgw::vo
