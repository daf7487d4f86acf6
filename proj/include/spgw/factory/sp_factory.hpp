#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spgw/core/model.hpp"

namespace spgw {

/// Simulated key material per federated identity provider. Trust is a
/// mutual exchange of public keys recorded symmetrically at both gateways.
class TrustStore {
public:
    void register_peer(const std::string& peer_ref, const std::string& public_key);
    void revoke_peer(const std::string& peer_ref);
    std::optional<std::string> peer_key(const std::string& peer_ref) const;

    void trust_token(const std::string& collaboration_id, const std::string& token);
    void revoke_collaboration(const std::string& collaboration_id);
    bool token_trusted(const std::string& collaboration_id, const std::string& token) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> peer_keys_;
    std::map<std::string, std::set<std::string>> trusted_tokens_;  // per collaboration-id
};

struct AuditEntry {
    std::int64_t sequence = 0;  // strictly increasing per gateway
    std::string collaboration_id;
    std::string slot_id;
    std::string kind;     // VAS kind tag, or "swap" markers
    std::string verdict;  // continued | rejected(<reason>) | swap
    Tick timestamp = 0;
};

std::string audit_entry_line(const AuditEntry& e);

/// Append-only, totally ordered per gateway.
class AuditLog {
public:
    AuditEntry append(const std::string& collaboration_id, const std::string& slot_id,
                      const std::string& kind, const std::string& verdict, Tick now);
    std::vector<AuditEntry> entries() const;
    std::vector<AuditEntry> entries_for(const std::string& collaboration_id) const;
    std::string dump() const;

private:
    mutable std::mutex mutex_;
    std::int64_t next_sequence_ = 1;
    std::vector<AuditEntry> entries_;
};

/// One handler per leaf slot of the enacted CCM.
struct HandlerInstance {
    std::string slot_id;  // leaf slot path
    VasKind kind = VasKind::Audit;
    std::string instance_id;
    Doc config;  // delivered by config-push setup steps
    std::shared_ptr<std::atomic<std::int64_t>> invoked = std::make_shared<std::atomic<std::int64_t>>(0);
    std::shared_ptr<std::atomic<std::int64_t>> rejected = std::make_shared<std::atomic<std::int64_t>>(0);
};

struct InterceptResult {
    enum class Status { Forwarded, Rejected, NoProfile, Unavailable };
    Status status = Status::NoProfile;
    MessageEnvelope envelope;  // cumulative transform on Forwarded
    std::string reason;
    std::string slot_id;  // rejecting slot
};

struct ProfileStatus {
    std::string collaboration_id;
    ProfileState state = ProfileState::Validated;
    std::vector<std::string> chain;  // leaf slot paths in order
    std::int64_t setup_runs = 0;
    std::int64_t billing_count = 0;
    std::int64_t monitored_messages = 0;
};

/// Enactment engine and message broker for one gateway.
class SpFactory {
public:
    explicit SpFactory(TrustStore& trust, AuditLog& audit) : trust_(trust), audit_(audit) {}

    /// Runs the CCM's setup plan, builds the handler chain in leaf order and
    /// sets the initial state from the lifecycle policy. Re-enacting an
    /// identical CCM is a no-op returning the existing profile.
    ProfileStatus enact(const Ccm& ccm, const std::string& collaboration_id, Placement direction,
                        const LifecyclePolicy& lifecycle, Tick now);

    /// Runs the profile's handler chain over the envelope, short-circuiting
    /// on the first rejection. Latent profiles are set up on first message.
    InterceptResult intercept(const MessageEnvelope& envelope, Tick now);

    /// Recomputes availability from the lifecycle policy at the given time.
    ProfileStatus set_availability(const std::string& collaboration_id, Placement direction,
                                   Tick now);

    /// Atomically replaces the chain; messages observe the old chain or the
    /// new one, never a mixture. On setup failure the old chain remains.
    ProfileStatus swap_profile(const std::string& collaboration_id, const Ccm& new_ccm, Tick now);

    void retire(const std::string& collaboration_id);

    std::optional<ProfileStatus> status(const std::string& collaboration_id,
                                        Placement direction = Placement::Both) const;

private:
    struct Profile {
        std::mutex mutex;  // per-collaboration FIFO and swap serialization
        std::string collaboration_id;
        Placement direction = Placement::Both;
        Ccm ccm;
        std::uint64_t ccm_hash = 0;
        LifecyclePolicy lifecycle;
        ProfileState state = ProfileState::Validated;
        std::vector<HandlerInstance> chain;
        std::int64_t setup_runs = 0;
        std::int64_t billing_count = 0;
        std::int64_t monitored_messages = 0;
    };

    using ProfileKey = std::pair<std::string, int>;  // (collaboration-id, direction)

    std::vector<HandlerInstance> build_chain(const Ccm& ccm);
    void run_setup(Profile& p);  // throws SetupFailed
    ProfileState initial_state(const LifecyclePolicy& lifecycle, Tick now) const;
    std::shared_ptr<Profile> lookup(const std::string& collaboration_id, Direction direction) const;
    ProfileStatus status_of(const Profile& p) const;

    struct HandlerVerdict {
        bool cont = true;
        std::string reason;
    };
    HandlerVerdict run_handler(Profile& p, HandlerInstance& h, MessageEnvelope& envelope);

    TrustStore& trust_;
    AuditLog& audit_;
    mutable std::mutex profiles_mutex_;
    std::map<ProfileKey, std::shared_ptr<Profile>> profiles_;
};

}  // namespace spgw
