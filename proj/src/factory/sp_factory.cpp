#include "spgw/factory/sp_factory.hpp"

#include <sstream>

namespace spgw {

// ---------------------------------------------------------------------------
// TrustStore

void TrustStore::register_peer(const std::string& peer_ref, const std::string& public_key) {
    std::lock_guard lock(mutex_);
    peer_keys_[peer_ref] = public_key;
}

void TrustStore::revoke_peer(const std::string& peer_ref) {
    std::lock_guard lock(mutex_);
    peer_keys_.erase(peer_ref);
}

std::optional<std::string> TrustStore::peer_key(const std::string& peer_ref) const {
    std::lock_guard lock(mutex_);
    auto it = peer_keys_.find(peer_ref);
    if (it == peer_keys_.end()) return std::nullopt;
    return it->second;
}

void TrustStore::trust_token(const std::string& collaboration_id, const std::string& token) {
    std::lock_guard lock(mutex_);
    trusted_tokens_[collaboration_id].insert(token);
}

void TrustStore::revoke_collaboration(const std::string& collaboration_id) {
    std::lock_guard lock(mutex_);
    trusted_tokens_.erase(collaboration_id);
}

bool TrustStore::token_trusted(const std::string& collaboration_id, const std::string& token) const {
    std::lock_guard lock(mutex_);
    auto it = trusted_tokens_.find(collaboration_id);
    return it != trusted_tokens_.end() && it->second.count(token) > 0;
}

// ---------------------------------------------------------------------------
// AuditLog

std::string audit_entry_line(const AuditEntry& e) {
    Doc d = Doc::object();
    d["sequence"] = e.sequence;
    d["collaboration-id"] = e.collaboration_id;
    d["slot-id"] = e.slot_id;
    d["kind"] = e.kind;
    d["verdict"] = e.verdict;
    d["timestamp"] = e.timestamp;
    return d.dump();
}

AuditEntry AuditLog::append(const std::string& collaboration_id, const std::string& slot_id,
                            const std::string& kind, const std::string& verdict, Tick now) {
    std::lock_guard lock(mutex_);
    AuditEntry e{next_sequence_++, collaboration_id, slot_id, kind, verdict, now};
    entries_.push_back(e);
    return e;
}

std::vector<AuditEntry> AuditLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::vector<AuditEntry> AuditLog::entries_for(const std::string& collaboration_id) const {
    std::lock_guard lock(mutex_);
    std::vector<AuditEntry> out;
    for (const auto& e : entries_)
        if (e.collaboration_id == collaboration_id) out.push_back(e);
    return out;
}

std::string AuditLog::dump() const {
    std::ostringstream out;
    for (const auto& e : entries()) out << audit_entry_line(e) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// SpFactory

namespace {

int direction_key(Placement p) { return static_cast<int>(p); }

Placement as_placement(Direction d) {
    return d == Direction::Request ? Placement::Request : Placement::Response;
}

}  // namespace

std::vector<HandlerInstance> SpFactory::build_chain(const Ccm& ccm) {
    std::vector<HandlerInstance> chain;
    for (const auto& leaf : leaf_slots(ccm.ascm)) {
        HandlerInstance h;
        h.slot_id = leaf.path;
        h.kind = leaf.kind;
        auto it = ccm.instance_bindings.find(leaf.path);
        if (it != ccm.instance_bindings.end()) h.instance_id = it->second.instance_id;
        chain.push_back(std::move(h));
    }
    return chain;
}

void SpFactory::run_setup(Profile& p) {
    for (const auto& planned : p.ccm.setup_plan) {
        switch (planned.step.kind) {
            case SetupStepKind::TrustBootstrap: {
                auto key = trust_.peer_key(planned.step.peer_ref);
                if (!key)
                    throw Error(Errc::SetupFailed,
                                "trust-bootstrap: unknown peer " + planned.step.peer_ref);
                // simulated key exchange: the peer's public key becomes an
                // accepted token for this collaboration
                trust_.trust_token(p.collaboration_id, *key);
                break;
            }
            case SetupStepKind::ConfigPush:
                for (auto& h : p.chain)
                    if (h.slot_id == planned.slot_path) h.config = planned.step.document;
                break;
            case SetupStepKind::None:
                break;
        }
    }
    p.setup_runs++;
}

ProfileState SpFactory::initial_state(const LifecyclePolicy& lifecycle, Tick now) const {
    switch (lifecycle.mode) {
        case LifecycleMode::Eager: return ProfileState::Active;
        case LifecycleMode::Scheduled:
            for (const auto& w : lifecycle.windows)
                if (w.contains(now)) return ProfileState::Active;
            return ProfileState::Dormant;
        case LifecycleMode::OnDemand: return ProfileState::Latent;
    }
    return ProfileState::Active;
}

ProfileStatus SpFactory::status_of(const Profile& p) const {
    ProfileStatus s;
    s.collaboration_id = p.collaboration_id;
    s.state = p.state;
    for (const auto& h : p.chain) s.chain.push_back(h.slot_id);
    s.setup_runs = p.setup_runs;
    s.billing_count = p.billing_count;
    s.monitored_messages = p.monitored_messages;
    return s;
}

ProfileStatus SpFactory::enact(const Ccm& ccm, const std::string& collaboration_id,
                               Placement direction, const LifecyclePolicy& lifecycle, Tick now) {
    if (!collaboration_id_well_formed(collaboration_id))
        throw Error(Errc::ProfileConflict, "malformed collaboration-id");
    const auto hash = ccm_content_hash(ccm);
    std::shared_ptr<Profile> profile;
    {
        std::lock_guard lock(profiles_mutex_);
        auto key = ProfileKey{collaboration_id, direction_key(direction)};
        auto it = profiles_.find(key);
        if (it != profiles_.end()) {
            std::lock_guard plock(it->second->mutex);
            if (it->second->ccm_hash != hash)
                throw Error(Errc::ProfileConflict, collaboration_id);
            return status_of(*it->second);  // idempotent re-enact
        }
        profile = std::make_shared<Profile>();
        profile->collaboration_id = collaboration_id;
        profile->direction = direction;
        profile->ccm = ccm;
        profile->ccm_hash = hash;
        profile->lifecycle = lifecycle;
        profile->chain = build_chain(ccm);
        profile->state = ProfileState::Enacted;
        profiles_[key] = profile;
    }

    std::lock_guard plock(profile->mutex);
    if (lifecycle.mode != LifecycleMode::OnDemand) {
        try {
            run_setup(*profile);
        } catch (...) {
            std::lock_guard lock(profiles_mutex_);
            profiles_.erase(ProfileKey{collaboration_id, direction_key(direction)});
            throw;
        }
    }
    profile->state = initial_state(lifecycle, now);
    return status_of(*profile);
}

std::shared_ptr<SpFactory::Profile> SpFactory::lookup(const std::string& collaboration_id,
                                                      Direction direction) const {
    std::lock_guard lock(profiles_mutex_);
    auto exact = profiles_.find({collaboration_id, direction_key(as_placement(direction))});
    if (exact != profiles_.end()) return exact->second;
    auto both = profiles_.find({collaboration_id, direction_key(Placement::Both)});
    if (both != profiles_.end()) return both->second;
    return nullptr;
}

SpFactory::HandlerVerdict SpFactory::run_handler(Profile& p, HandlerInstance& h,
                                                 MessageEnvelope& envelope) {
    switch (h.kind) {
        case VasKind::PolicyEnforcement:
            if (!collaboration_id_well_formed(envelope.collaboration_id))
                return {false, "malformed-envelope"};
            if (!placement_covers(p.direction, as_placement(envelope.direction)))
                return {false, "malformed-envelope"};
            return {};
        case VasKind::Authentication:
        case VasKind::TokenValidation: {
            auto it = envelope.headers.find("token");
            if (it == envelope.headers.end()) return {false, "invalid-token"};
            if (trust_.token_trusted(p.collaboration_id, it->second)) return {};
            if (it->second == "issued:" + p.collaboration_id) return {};
            return {false, "invalid-token"};
        }
        case VasKind::Authorisation: {
            if (!h.config.is_object() || !h.config.contains("allowed-roles")) return {};
            auto it = envelope.headers.find("sender-role");
            if (it == envelope.headers.end()) return {false, "role-not-allowed"};
            for (const auto& role : h.config.at("allowed-roles"))
                if (role.get<std::string>() == it->second) return {};
            return {false, "role-not-allowed"};
        }
        case VasKind::Audit:
            return {};  // the broker appends the audit entry for every handler
        case VasKind::Billing:
            p.billing_count++;
            return {};
        case VasKind::Translation: {
            if (!h.config.is_object() || !h.config.contains("field")) return {};
            Doc payload = Doc::parse(envelope.payload, nullptr, false);
            if (payload.is_discarded() || !payload.is_object()) return {};
            payload[h.config.at("field").get<std::string>()] = h.config.value("value", "");
            envelope.payload = payload.dump();
            return {};
        }
        case VasKind::Monitoring:
            p.monitored_messages++;
            return {};
        case VasKind::TokenIssuance:
            envelope.headers["token"] = "issued:" + p.collaboration_id;
            return {};
    }
    return {};
}

InterceptResult SpFactory::intercept(const MessageEnvelope& envelope, Tick now) {
    InterceptResult result;
    if (!collaboration_id_well_formed(envelope.collaboration_id)) {
        result.status = InterceptResult::Status::NoProfile;
        result.reason = "malformed collaboration-id";
        return result;
    }
    auto profile = lookup(envelope.collaboration_id, envelope.direction);
    if (!profile) {
        result.status = InterceptResult::Status::NoProfile;
        result.reason = "unknown collaboration-id";
        return result;
    }

    std::lock_guard plock(profile->mutex);  // per-collaboration FIFO
    Profile& p = *profile;
    if (p.state == ProfileState::Retired) {
        result.status = InterceptResult::Status::NoProfile;
        result.reason = "profile retired";
        return result;
    }
    if (p.lifecycle.mode == LifecycleMode::Scheduled) {
        p.state = initial_state(p.lifecycle, now);
    }
    if (p.state == ProfileState::Dormant) {
        result.status = InterceptResult::Status::Unavailable;
        result.reason = "profile dormant outside its availability windows";
        return result;
    }
    if (p.state == ProfileState::Latent) {
        // on-demand: first message pays the setup cost, later ones reuse it
        try {
            run_setup(p);
        } catch (const Error& e) {
            result.status = InterceptResult::Status::Rejected;
            result.reason = e.what();
            return result;
        }
        p.state = ProfileState::Active;
    }

    MessageEnvelope current = envelope;
    for (auto& h : p.chain) {
        h.invoked->fetch_add(1);
        auto verdict = run_handler(p, h, current);
        if (verdict.cont) {
            audit_.append(p.collaboration_id, h.slot_id, to_string(h.kind), "continued", now);
        } else {
            h.rejected->fetch_add(1);
            audit_.append(p.collaboration_id, h.slot_id, to_string(h.kind),
                          "rejected(" + verdict.reason + ")", now);
            result.status = InterceptResult::Status::Rejected;
            result.reason = verdict.reason;
            result.slot_id = h.slot_id;
            return result;
        }
    }
    result.status = InterceptResult::Status::Forwarded;
    result.envelope = std::move(current);
    return result;
}

ProfileStatus SpFactory::set_availability(const std::string& collaboration_id, Placement direction,
                                          Tick now) {
    std::shared_ptr<Profile> profile;
    {
        std::lock_guard lock(profiles_mutex_);
        auto it = profiles_.find({collaboration_id, direction_key(direction)});
        if (it == profiles_.end()) throw Error(Errc::NoProfile, collaboration_id);
        profile = it->second;
    }
    std::lock_guard plock(profile->mutex);
    Profile& p = *profile;
    if (p.state == ProfileState::Retired) throw Error(Errc::NoProfile, collaboration_id);
    switch (p.lifecycle.mode) {
        case LifecycleMode::Eager:
            p.state = ProfileState::Active;
            break;
        case LifecycleMode::Scheduled:
            p.state = initial_state(p.lifecycle, now);
            break;
        case LifecycleMode::OnDemand:
            if (p.setup_runs == 0) p.state = ProfileState::Latent;
            break;
    }
    return status_of(p);
}

ProfileStatus SpFactory::swap_profile(const std::string& collaboration_id, const Ccm& new_ccm,
                                      Tick now) {
    std::shared_ptr<Profile> profile;
    {
        std::lock_guard lock(profiles_mutex_);
        for (auto& [key, p] : profiles_)
            if (key.first == collaboration_id) profile = p;
        if (!profile) throw Error(Errc::NoProfile, collaboration_id);
    }
    std::lock_guard plock(profile->mutex);  // serialization point with intercepts
    Profile& p = *profile;
    if (p.state == ProfileState::Retired) throw Error(Errc::NoProfile, collaboration_id);
    const auto hash = ccm_content_hash(new_ccm);
    if (hash == p.ccm_hash) return status_of(p);  // idempotent

    // stage the new chain fully before committing; old chain stays on failure
    auto staged_chain = build_chain(new_ccm);
    for (const auto& planned : new_ccm.setup_plan) {
        switch (planned.step.kind) {
            case SetupStepKind::TrustBootstrap: {
                auto key = trust_.peer_key(planned.step.peer_ref);
                if (!key)
                    throw Error(Errc::SetupFailed,
                                "trust-bootstrap: unknown peer " + planned.step.peer_ref);
                trust_.trust_token(p.collaboration_id, *key);
                break;
            }
            case SetupStepKind::ConfigPush:
                for (auto& h : staged_chain)
                    if (h.slot_id == planned.slot_path) h.config = planned.step.document;
                break;
            case SetupStepKind::None:
                break;
        }
    }
    p.ccm = new_ccm;
    p.ccm_hash = hash;
    p.chain = std::move(staged_chain);
    p.setup_runs++;
    audit_.append(p.collaboration_id, "(swap)", "swap", "swap", now);
    return status_of(p);
}

void SpFactory::retire(const std::string& collaboration_id) {
    std::vector<std::shared_ptr<Profile>> found;
    {
        std::lock_guard lock(profiles_mutex_);
        for (auto it = profiles_.begin(); it != profiles_.end();) {
            if (it->first.first == collaboration_id) {
                found.push_back(it->second);
                it = profiles_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& p : found) {
        std::lock_guard plock(p->mutex);  // drain in-flight messages
        p->state = ProfileState::Retired;
    }
    trust_.revoke_collaboration(collaboration_id);
}

std::optional<ProfileStatus> SpFactory::status(const std::string& collaboration_id,
                                               Placement direction) const {
    std::shared_ptr<Profile> profile;
    {
        std::lock_guard lock(profiles_mutex_);
        auto it = profiles_.find({collaboration_id, direction_key(direction)});
        if (it == profiles_.end()) {
            for (auto& [key, p] : profiles_)
                if (key.first == collaboration_id) profile = p;
        } else {
            profile = it->second;
        }
    }
    if (!profile) return std::nullopt;
    std::lock_guard plock(profile->mutex);
    return status_of(*profile);
}

}  // namespace spgw
