#include "spgw/vo/vo_manager.hpp"

#include <algorithm>

#include "spgw/core/error.hpp"

namespace spgw::vo {

std::string to_string(VoState s) {
    switch (s) {
        case VoState::Empty: return "empty";
        case VoState::Configured: return "configured";
        case VoState::Inviting: return "inviting";
        case VoState::Federated: return "federated";
        case VoState::Virtualized: return "virtualized";
        case VoState::Operational: return "operational";
        case VoState::Adapting: return "adapting";
        case VoState::Dissolved: return "dissolved";
    }
    return "?";
}

Doc business_card_to_doc(const BusinessCard& c) {
    return Doc{{"partner-id", c.partner_id},
               {"role", c.role},
               {"fip-ref", c.fip_ref},
               {"public-key", c.public_key}};
}

BusinessCard business_card_from_doc(const Doc& d) {
    BusinessCard c;
    c.partner_id = d.at("partner-id").get<std::string>();
    c.role = d.at("role").get<std::string>();
    c.fip_ref = d.at("fip-ref").get<std::string>();
    c.public_key = d.at("public-key").get<std::string>();
    return c;
}

Doc vo_record_to_doc(const VoRecord& r) {
    Doc roster = Doc::object();
    for (const auto& [id, entry] : r.roster) {
        const char* status = entry.status == InvitationStatus::Invited    ? "invited"
                             : entry.status == InvitationStatus::Accepted ? "accepted"
                                                                          : "declined";
        roster[id] = Doc{{"role", entry.role},
                         {"profile-ref", entry.profile_ref},
                         {"status", status},
                         {"flagged", entry.flagged}};
    }
    Doc process = Doc::array();
    for (const auto& s : r.process)
        process.push_back(Doc{{"role", s.role}, {"business-function", s.business_function}});
    Doc cards = Doc::array();
    for (const auto& c : r.business_cards) cards.push_back(business_card_to_doc(c));
    Doc edges = Doc::array();
    for (const auto& [a, b] : r.trust_edges) edges.push_back(Doc::array({a, b}));
    Doc collabs = Doc::object();
    for (const auto& [id, c] : r.collaboration_ids) collabs[id] = c;
    return Doc{{"vo-id", r.vo_id},       {"initiator", r.initiator},
               {"vhe-ref", r.vhe_ref},   {"state", to_string(r.state)},
               {"process", process},     {"roster", roster},
               {"business-cards", cards}, {"trust-edges", edges},
               {"collaboration-ids", collabs}};
}

// ---------------------------------------------------------------------------

VoRecord& VoManager::require(const std::string& vo_id) {
    auto it = vos_.find(vo_id);
    if (it == vos_.end()) throw Error(Errc::InvalidState, "unknown vo " + vo_id);
    return it->second;
}

std::vector<std::string> VoManager::members(const VoRecord& vo) const {
    std::vector<std::string> out;
    for (const auto& [id, entry] : vo.roster)
        if (entry.status == InvitationStatus::Accepted) out.push_back(id);
    return out;  // map order, already sorted
}

VoRecord VoManager::create_vo(const std::string& vo_id, const std::string& initiator,
                              const std::string& vhe_ref) {
    std::lock_guard lock(mutex_);
    if (!host_.partner_registered(initiator))
        throw Error(Errc::UnknownPartner, initiator);
    if (vos_.count(vo_id)) throw Error(Errc::InvalidState, "vo " + vo_id + " already exists");
    VoRecord vo;
    vo.vo_id = vo_id;
    vo.initiator = initiator;
    vo.vhe_ref = vhe_ref;
    vo.state = VoState::Empty;
    // the initiator is a member from the start, with its default profile
    vo.roster[initiator] = {host_.business_card(initiator).role, "default",
                            InvitationStatus::Accepted, false};
    vos_[vo_id] = vo;
    return vo;
}

VoRecord VoManager::attach_process(const std::string& vo_id, std::vector<ProcessStep> process) {
    std::lock_guard lock(mutex_);
    auto& vo = require(vo_id);
    if (vo.state != VoState::Empty)
        throw Error(Errc::InvalidState, "process already attached to " + vo_id);
    if (process.empty()) throw Error(Errc::InvalidState, "empty process document");
    vo.process = std::move(process);
    vo.state = VoState::Configured;
    return vo;
}

std::string VoManager::invite(const std::string& vo_id, const std::string& provider_id) {
    std::lock_guard lock(mutex_);
    auto& vo = require(vo_id);
    if (vo.state != VoState::Configured && vo.state != VoState::Inviting)
        throw Error(Errc::InvalidState, "cannot invite while " + to_string(vo.state));

    auto published = host_.business_functions(provider_id);
    std::string role;
    for (const auto& step : vo.process)
        if (std::find(published.begin(), published.end(), step.business_function) !=
            published.end()) {
            role = step.role;
            break;
        }
    if (role.empty())
        throw Error(Errc::NoMatchingFunction, provider_id + " publishes no process function");

    vo.state = VoState::Inviting;
    vo.roster[provider_id] = {role, "", InvitationStatus::Invited, false};

    Doc view = Doc{{"vo-id", vo_id}, {"steps", Doc::array()}};
    for (const auto& s : vo.process)
        view["steps"].push_back(Doc{{"role", s.role}, {"business-function", s.business_function}});
    host_.deliver_process_view(provider_id, vo_id, view);

    std::string invitation_id = "inv-" + std::to_string(next_invitation_++);
    invitations_[invitation_id] = {vo_id, provider_id, false};
    return invitation_id;
}

VoRecord VoManager::respond_invitation(const std::string& invitation_id, bool accept,
                                       const std::string& profile_ref) {
    std::lock_guard lock(mutex_);
    auto it = invitations_.find(invitation_id);
    if (it == invitations_.end()) throw Error(Errc::UnknownInvitation, invitation_id);
    if (it->second.answered) throw Error(Errc::AlreadyAnswered, invitation_id);

    auto& vo = require(it->second.vo_id);
    // invitations expire once the federation leaves the inviting phase
    if (vo.state != VoState::Inviting)
        throw Error(Errc::InvalidState, "invitation expired, vo is " + to_string(vo.state));
    it->second.answered = true;
    auto& entry = vo.roster.at(it->second.provider_id);
    if (accept) {
        entry.status = InvitationStatus::Accepted;
        entry.profile_ref = profile_ref;
    } else {
        entry.status = InvitationStatus::Declined;
    }
    return vo;
}

void VoManager::federate_member(VoRecord& vo, const std::string& partner_id) {
    std::string collab = vo.vo_id + ":" + partner_id;
    vo.collaboration_ids[partner_id] = collab;
    host_.push_policies(partner_id, collab,
                        Doc{{"vo-id", vo.vo_id}, {"collaboration-id", collab}});
}

VoRecord VoManager::finalize_federation(const std::string& vo_id) {
    std::lock_guard lock(mutex_);
    auto& vo = require(vo_id);
    if (vo.state != VoState::Inviting)
        throw Error(Errc::InvalidState, "cannot finalize while " + to_string(vo.state));

    auto accepted = members(vo);
    for (const auto& step : vo.process) {
        bool covered = std::any_of(accepted.begin(), accepted.end(), [&](const std::string& m) {
            return vo.roster.at(m).role == step.role;
        });
        if (!covered) throw Error(Errc::RoleUncovered, step.role);
    }
    vo.state = VoState::Federated;

    vo.business_cards.clear();
    for (const auto& m : accepted) vo.business_cards.push_back(host_.business_card(m));
    for (const auto& m : accepted) host_.distribute_cards(m, vo_id, vo.business_cards);

    for (std::size_t i = 0; i < vo.business_cards.size(); ++i)
        for (std::size_t j = i + 1; j < vo.business_cards.size(); ++j) {
            const auto& a = vo.business_cards[i];
            const auto& b = vo.business_cards[j];
            host_.establish_trust(a, b);
            vo.trust_edges.insert({std::min(a.fip_ref, b.fip_ref), std::max(a.fip_ref, b.fip_ref)});
        }

    for (const auto& m : accepted) federate_member(vo, m);

    vo.state = VoState::Virtualized;
    std::string first_failure;
    for (const auto& m : accepted) {
        try {
            host_.enact_profile(m, vo.collaboration_ids.at(m), vo.roster.at(m).profile_ref);
        } catch (const std::exception& e) {
            vo.roster.at(m).flagged = true;
            if (first_failure.empty()) first_failure = m + ": " + e.what();
        }
    }
    if (!first_failure.empty()) {
        vo.state = VoState::Federated;
        throw Error(Errc::PlanningFailed, first_failure);
    }
    vo.state = VoState::Operational;
    return vo;
}

VoRecord VoManager::adapt_vo(const std::string& vo_id, const std::string& initiator_id,
                             const VoChange& change) {
    std::lock_guard lock(mutex_);
    auto& vo = require(vo_id);
    if (vo.state != VoState::Operational)
        throw Error(Errc::InvalidState, "cannot adapt while " + to_string(vo.state));

    const std::string affected = std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, NewProfile>) return c.partner_id;
            else if constexpr (std::is_same_v<T, MemberJoin>) return c.provider_id;
            else return c.partner_id;
        },
        change);
    if (initiator_id != vo.initiator && initiator_id != affected)
        throw Error(Errc::NotAuthorized, initiator_id);

    vo.state = VoState::Adapting;
    try {
        if (const auto* np = std::get_if<NewProfile>(&change)) {
            auto it = vo.collaboration_ids.find(np->partner_id);
            if (it == vo.collaboration_ids.end())
                throw Error(Errc::UnknownPartner, np->partner_id + " is not federated");
            host_.swap_profile(np->partner_id, it->second, np->request);
        } else if (const auto* join = std::get_if<MemberJoin>(&change)) {
            auto published = host_.business_functions(join->provider_id);
            std::string role;
            for (const auto& step : vo.process)
                if (std::find(published.begin(), published.end(), step.business_function) !=
                    published.end()) {
                    role = step.role;
                    break;
                }
            if (role.empty()) throw Error(Errc::NoMatchingFunction, join->provider_id);

            auto card = host_.business_card(join->provider_id);
            for (const auto& existing : vo.business_cards) {
                host_.establish_trust(existing, card);
                vo.trust_edges.insert({std::min(existing.fip_ref, card.fip_ref),
                                       std::max(existing.fip_ref, card.fip_ref)});
            }
            vo.roster[join->provider_id] = {role, join->profile_ref, InvitationStatus::Accepted,
                                            false};
            vo.business_cards.push_back(card);
            for (const auto& m : members(vo)) host_.distribute_cards(m, vo_id, vo.business_cards);
            federate_member(vo, join->provider_id);
            host_.enact_profile(join->provider_id, vo.collaboration_ids.at(join->provider_id),
                                join->profile_ref);
        } else {
            const auto& leave = std::get<MemberLeave>(change);
            auto it = vo.collaboration_ids.find(leave.partner_id);
            if (it == vo.collaboration_ids.end())
                throw Error(Errc::UnknownPartner, leave.partner_id + " is not federated");
            host_.retire_profile(leave.partner_id, it->second);

            auto card_it = std::find_if(vo.business_cards.begin(), vo.business_cards.end(),
                                        [&](const BusinessCard& c) {
                                            return c.partner_id == leave.partner_id;
                                        });
            if (card_it != vo.business_cards.end()) {
                BusinessCard leaving = *card_it;
                vo.business_cards.erase(card_it);
                for (const auto& remaining : vo.business_cards)
                    host_.revoke_trust(remaining, leaving);
                std::erase_if(vo.trust_edges, [&](const FipEdge& e) {
                    return e.first == leaving.fip_ref || e.second == leaving.fip_ref;
                });
            }
            vo.roster.erase(leave.partner_id);
            vo.collaboration_ids.erase(leave.partner_id);
        }
    } catch (...) {
        vo.state = VoState::Operational;  // old configuration stays in force
        throw;
    }
    vo.state = VoState::Operational;
    return vo;
}

VoRecord VoManager::dissolve(const std::string& vo_id) {
    std::lock_guard lock(mutex_);
    auto& vo = require(vo_id);
    if (vo.state == VoState::Dissolved) throw Error(Errc::InvalidState, vo_id + " already dissolved");
    for (const auto& [partner, collab] : vo.collaboration_ids) host_.retire_profile(partner, collab);
    for (std::size_t i = 0; i < vo.business_cards.size(); ++i)
        for (std::size_t j = i + 1; j < vo.business_cards.size(); ++j)
            host_.revoke_trust(vo.business_cards[i], vo.business_cards[j]);
    vo.trust_edges.clear();
    vo.collaboration_ids.clear();
    vo.state = VoState::Dissolved;
    return vo;
}

VoRecord VoManager::record(const std::string& vo_id) const {
    std::lock_guard lock(mutex_);
    auto it = vos_.find(vo_id);
    if (it == vos_.end()) throw Error(Errc::InvalidState, "unknown vo " + vo_id);
    return it->second;
}

std::vector<std::string> VoManager::vo_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : vos_) out.push_back(id);
    return out;
}

}  // namespace spgw::vo
