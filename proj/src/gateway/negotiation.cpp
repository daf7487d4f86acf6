#include "spgw/gateway/negotiation.hpp"

#include <algorithm>
#include <set>

#include "spgw/core/error.hpp"

namespace spgw::gw {

namespace {

const ConstraintList* constraints_for(const ProfileRequest& r, VasKind kind) {
    for (const auto& w : r.wanted)
        if (w.kind == kind) return &w.constraints;
    return nullptr;
}

std::set<std::string> semantic_tags(const ConstraintList& cs) {
    std::set<std::string> tags;
    for (const auto& c : cs)
        if (c.kind == ConstraintKind::Semantics) tags.insert(c.semantics_tag);
    return tags;
}

std::optional<std::int64_t> min_latency(const ConstraintList& cs) {
    std::optional<std::int64_t> best;
    for (const auto& c : cs)
        if (c.kind == ConstraintKind::QosMaxLatencyMs)
            best = best ? std::min(*best, c.bound) : c.bound;
    return best;
}

std::optional<std::int64_t> max_throughput(const ConstraintList& cs) {
    std::optional<std::int64_t> best;
    for (const auto& c : cs)
        if (c.kind == ConstraintKind::QosMinThroughputRps)
            best = best ? std::max(*best, c.bound) : c.bound;
    return best;
}

/// Flat declaration-order indices of a party's constraints that participate
/// in an incompatibility with the other side. The owner's QoS bounds state
/// what it can guarantee, the requester's what it demands.
std::vector<std::size_t> incompatible_indices(const ProfileRequest& mine,
                                              const ProfileRequest& requester_pos,
                                              const ProfileRequest& owner_pos) {
    std::vector<std::size_t> marked;
    std::size_t flat = 0;
    for (const auto& w : mine.wanted) {
        const auto* req = constraints_for(requester_pos, w.kind);
        const auto* own = constraints_for(owner_pos, w.kind);
        bool shared = req && own;
        bool sem_clash = false, lat_clash = false, thr_clash = false;
        if (shared) {
            auto rt = semantic_tags(*req);
            auto ot = semantic_tags(*own);
            if (!rt.empty() && !ot.empty()) {
                sem_clash = std::none_of(rt.begin(), rt.end(),
                                         [&](const std::string& t) { return ot.count(t); });
            }
            auto rl = min_latency(*req), ol = min_latency(*own);
            lat_clash = rl && ol && *ol > *rl;
            auto rr = max_throughput(*req), orr = max_throughput(*own);
            thr_clash = rr && orr && *orr < *rr;
        }
        for (const auto& c : w.constraints) {
            bool hit = (c.kind == ConstraintKind::Semantics && sem_clash) ||
                       (c.kind == ConstraintKind::QosMaxLatencyMs && lat_clash) ||
                       (c.kind == ConstraintKind::QosMinThroughputRps && thr_clash);
            if (hit) marked.push_back(flat);
            flat++;
        }
    }
    return marked;
}

void drop_flat_constraint(ProfileRequest& r, std::size_t flat) {
    for (auto& w : r.wanted) {
        if (flat < w.constraints.size()) {
            w.constraints.erase(w.constraints.begin() + static_cast<std::ptrdiff_t>(flat));
            return;
        }
        flat -= w.constraints.size();
    }
}

ProfileRequest intersection_offer(const ProfileRequest& requester_pos,
                                  const ProfileRequest& owner_pos) {
    ProfileRequest agreed;
    agreed.owner_id = requester_pos.owner_id;
    agreed.resource_id = requester_pos.resource_id;
    agreed.direction = Placement::Both;
    agreed.adaptability = requester_pos.adaptability;

    std::vector<VasKind> kinds;
    for (const auto& w : requester_pos.wanted) kinds.push_back(w.kind);
    for (const auto& w : owner_pos.wanted)
        if (!constraints_for(requester_pos, w.kind)) kinds.push_back(w.kind);

    for (auto kind : kinds) {
        const auto* req = constraints_for(requester_pos, kind);
        const auto* own = constraints_for(owner_pos, kind);
        WantedEntry entry{kind, {}};
        if (req && own) {
            auto lat = min_latency(*req);
            if (auto ol = min_latency(*own)) lat = lat ? std::min(*lat, *ol) : *ol;
            if (lat) entry.constraints.push_back(Constraint::max_latency_ms(*lat));
            auto thr = max_throughput(*req);
            if (auto ot = max_throughput(*own)) thr = thr ? std::max(*thr, *ot) : *ot;
            if (thr) entry.constraints.push_back(Constraint::min_throughput_rps(*thr));
            auto rt = semantic_tags(*req);
            auto ot = semantic_tags(*own);
            if (rt.empty())
                for (const auto& t : ot) entry.constraints.push_back(Constraint::semantics(t));
            else if (ot.empty())
                for (const auto& t : rt) entry.constraints.push_back(Constraint::semantics(t));
            else
                for (const auto& t : rt)
                    if (ot.count(t)) entry.constraints.push_back(Constraint::semantics(t));
            bool placed = std::any_of(req->begin(), req->end(), [](const Constraint& c) {
                              return c.kind == ConstraintKind::PlacementKind;
                          }) ||
                          std::any_of(own->begin(), own->end(), [](const Constraint& c) {
                              return c.kind == ConstraintKind::PlacementKind;
                          });
            if (placed) entry.constraints.push_back(Constraint::of_placement(Placement::Both));
        } else {
            entry.constraints = req ? *req : *own;
        }
        agreed.wanted.push_back(std::move(entry));
    }
    return agreed;
}

}  // namespace

bool offer_satisfies(const ProfileRequest& offer, const ProfileRequest& envelope) {
    for (const auto& w : envelope.wanted) {
        const auto* offered = constraints_for(offer, w.kind);
        if (!offered) {
            if (!w.constraints.empty()) return false;
            continue;
        }
        if (!constraint_satisfies(*offered, w.constraints)) return false;
    }
    return true;
}

NegotiationSession open_negotiation(std::string session_id, NegotiationParty requester,
                                    NegotiationParty owner, int max_rounds) {
    NegotiationSession s;
    s.session_id = std::move(session_id);
    s.requester = std::move(requester);
    s.owner = std::move(owner);
    s.max_rounds = max_rounds;
    s.expected_sender = s.requester.gateway_id;
    return s;
}

void negotiate(NegotiationSession& s, const std::string& sender_id, const ProfileRequest& offer) {
    if (s.status != NegotiationSession::Status::Negotiating)
        throw Error(Errc::SessionClosed, s.session_id);
    if (sender_id != s.expected_sender)
        throw Error(Errc::ProtocolViolation, "out of turn: " + sender_id);

    bool from_requester = sender_id == s.requester.gateway_id;
    auto& sender = from_requester ? s.requester : s.owner;
    auto& receiver = from_requester ? s.owner : s.requester;
    sender.envelope = offer;  // the offer is the sender's declared position
    s.transcript.emplace_back(sender_id, offer);
    s.round++;

    auto marked = incompatible_indices(receiver.envelope, s.requester.envelope, s.owner.envelope);
    bool compatible =
        incompatible_indices(s.requester.envelope, s.requester.envelope, s.owner.envelope).empty() &&
        incompatible_indices(s.owner.envelope, s.requester.envelope, s.owner.envelope).empty();

    if (compatible) {
        s.agreed = intersection_offer(s.requester.envelope, s.owner.envelope);
        s.transcript.emplace_back(receiver.gateway_id, s.agreed);
        s.status = NegotiationSession::Status::Agreed;
        return;
    }
    if (s.round >= s.max_rounds) {
        s.status = NegotiationSession::Status::Rejected;
        s.reject_reason = "no-convergence";
        return;
    }
    // the receiver concedes their last-declared incompatible constraint,
    // unless their adaptability forbids it
    if (!marked.empty() && receiver.envelope.adaptability != AdaptabilityLevel::Locked)
        drop_flat_constraint(receiver.envelope, marked.back());
    s.expected_sender = receiver.gateway_id;
}

NegotiationSession run_negotiation(std::string session_id, NegotiationParty requester,
                                   NegotiationParty owner, int max_rounds) {
    auto s = open_negotiation(std::move(session_id), std::move(requester), std::move(owner),
                              max_rounds);
    while (s.status == NegotiationSession::Status::Negotiating) {
        const auto& party =
            s.expected_sender == s.requester.gateway_id ? s.requester : s.owner;
        negotiate(s, party.gateway_id, party.envelope);
    }
    return s;
}

Doc negotiation_to_doc(const NegotiationSession& s) {
    Doc transcript = Doc::array();
    for (const auto& [party, offer] : s.transcript)
        transcript.push_back(Doc{{"party", party}, {"offer", profile_request_to_doc(offer)}});
    const char* status = s.status == NegotiationSession::Status::Negotiating ? "negotiating"
                         : s.status == NegotiationSession::Status::Agreed    ? "agreed"
                                                                             : "rejected";
    Doc d{{"session-id", s.session_id},
          {"requester", s.requester.gateway_id},
          {"owner", s.owner.gateway_id},
          {"round", s.round},
          {"max-rounds", s.max_rounds},
          {"status", status},
          {"transcript", transcript}};
    if (s.status == NegotiationSession::Status::Agreed)
        d["agreed"] = profile_request_to_doc(s.agreed);
    if (s.status == NegotiationSession::Status::Rejected) d["reason"] = s.reject_reason;
    return d;
}

}  // namespace spgw::gw
