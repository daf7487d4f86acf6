#include "spgw/gateway/gateway.hpp"

#include <algorithm>

namespace spgw::gw {

GatewayConfig config_from_doc(const Doc& d) {
    if (!d.is_object()) throw Error(Errc::ConfigError, "config must be an object");
    GatewayConfig c;
    try {
        c.gateway_id = d.at("gateway-id").get<std::string>();
        c.listen_address = d.value("listen-address", std::string("sim"));
        c.registry_journal = d.value("registry-journal", std::string());
        c.depth_limit = d.value("depth-limit", 3);
        c.latency_weight = d.value("latency-weight", 1.0 / 100.0);
        c.failure_weight = d.value("failure-weight", 10.0);
        c.history_weight = d.value("history-weight", 5.0);
        c.negotiation_max_rounds = d.value("negotiation-max-rounds", 4);
        c.scenario_seed = d.value("scenario-seed", std::int64_t{1});
    } catch (const Doc::exception& e) {
        throw Error(Errc::ConfigError, e.what());
    }
    if (c.gateway_id.empty()) throw Error(Errc::ConfigError, "empty gateway-id");
    if (c.latency_weight < 0 || c.failure_weight < 0 || c.history_weight < 0)
        throw Error(Errc::ConfigError, "cost weights must be non-negative");
    if (c.negotiation_max_rounds < 1) throw Error(Errc::ConfigError, "max-rounds must be positive");
    return c;
}

Doc config_to_doc(const GatewayConfig& c) {
    return Doc{{"gateway-id", c.gateway_id},
               {"listen-address", c.listen_address},
               {"registry-journal", c.registry_journal},
               {"depth-limit", c.depth_limit},
               {"latency-weight", c.latency_weight},
               {"failure-weight", c.failure_weight},
               {"history-weight", c.history_weight},
               {"negotiation-max-rounds", c.negotiation_max_rounds},
               {"scenario-seed", c.scenario_seed}};
}

namespace {

Doc card_doc(const vo::BusinessCard& c) { return vo::business_card_to_doc(c); }

Doc intercept_to_doc(const InterceptResult& r) {
    const char* status = r.status == InterceptResult::Status::Forwarded   ? "forwarded"
                         : r.status == InterceptResult::Status::Rejected  ? "rejected"
                         : r.status == InterceptResult::Status::NoProfile ? "no-profile"
                                                                          : "unavailable";
    Doc d{{"status", status}};
    if (!r.reason.empty()) d["reason"] = r.reason;
    if (!r.slot_id.empty()) d["slot-id"] = r.slot_id;
    if (r.status == InterceptResult::Status::Forwarded)
        d["envelope"] = envelope_to_doc(r.envelope);
    return d;
}

Doc status_to_doc(const ProfileStatus& s) {
    return Doc{{"collaboration-id", s.collaboration_id},
               {"state", to_string(s.state)},
               {"chain", s.chain},
               {"setup-runs", s.setup_runs},
               {"billing-count", s.billing_count},
               {"monitored-messages", s.monitored_messages}};
}

}  // namespace

GatewayNode::GatewayNode(GatewayConfig config, Network& network)
    : config_(std::move(config)),
      network_(network),
      factory_(trust_, audit_),
      vos_(*this) {
    if (!config_.registry_journal.empty()) registry_.attach_journal_file(config_.registry_journal);
    network_.register_gateway(config_.gateway_id, [this](const Frame& f) { return handle_frame(f); });
}

void GatewayNode::register_partner(const PartnerEntry& entry) {
    directory_[entry.card.partner_id] = entry;
}

void GatewayNode::register_profile(const std::string& name, const ProfileRequest& request) {
    profiles_[name] = request;
}

const PartnerEntry& GatewayNode::require_partner(const std::string& partner_id) const {
    auto it = directory_.find(partner_id);
    if (it == directory_.end()) throw Error(Errc::UnknownPartner, partner_id);
    return it->second;
}

Doc GatewayNode::to_partner(const std::string& partner_id, const std::string& frame_type,
                            const std::string& ref_id, Doc body) {
    const auto& entry = require_partner(partner_id);
    Frame f{frame_type, ref_id, config_.gateway_id, 1, std::move(body)};
    return network_.route(config_.gateway_id, entry.gateway_id, f);
}

PlanOutcomeDoc GatewayNode::plan_locally(const ProfileRequest& request) {
    plan::PlannerConfig pc;
    pc.depth_limit = config_.depth_limit;
    pc.latency_weight = config_.latency_weight;
    pc.failure_weight = config_.failure_weight;
    pc.history_weight = config_.history_weight;
    auto outcome = plan::plan_profile(request, registry_.snapshot(), registry_, pc);
    return {outcome, plan::plan_outcome_to_doc(outcome)};
}

Ccm GatewayNode::plan_request_or_throw(const ProfileRequest& request) {
    auto planned = plan_locally(request);
    if (!planned.outcome.ready() || !planned.outcome.ccm) {
        std::string detail = planned.outcome.error
                                 ? planned.outcome.error->detail
                                 : std::string("proposal requires approval");
        throw Error(Errc::PlanningFailed, detail);
    }
    return *planned.outcome.ccm;
}

InterceptResult GatewayNode::deliver(const MessageEnvelope& envelope) {
    return factory_.intercept(envelope, now);
}

Doc GatewayNode::send_message(const std::string& to_gateway, const MessageEnvelope& envelope) {
    Frame f{"message", envelope.collaboration_id, config_.gateway_id, 1,
            Doc{{"envelope", envelope_to_doc(envelope)}}};
    return network_.route(config_.gateway_id, to_gateway, f);
}

// ---------------------------------------------------------------------------
// VoHost: lifecycle side effects become frames to the member gateways

bool GatewayNode::partner_registered(const std::string& partner_id) const {
    return directory_.count(partner_id) > 0;
}

std::vector<std::string> GatewayNode::business_functions(const std::string& partner_id) const {
    auto it = directory_.find(partner_id);
    return it == directory_.end() ? std::vector<std::string>{} : it->second.business_functions;
}

vo::BusinessCard GatewayNode::business_card(const std::string& partner_id) const {
    return require_partner(partner_id).card;
}

void GatewayNode::deliver_process_view(const std::string& partner_id, const std::string& vo_id,
                                       const Doc& process_view) {
    to_partner(partner_id, "process-view", vo_id, Doc{{"view", process_view}});
}

void GatewayNode::distribute_cards(const std::string& partner_id, const std::string& vo_id,
                                   const std::vector<vo::BusinessCard>& cards) {
    Doc list = Doc::array();
    for (const auto& c : cards) list.push_back(card_doc(c));
    to_partner(partner_id, "business-cards", vo_id, Doc{{"cards", list}});
}

void GatewayNode::establish_trust(const vo::BusinessCard& a, const vo::BusinessCard& b) {
    to_partner(a.partner_id, "trust-exchange", "", Doc{{"peer", card_doc(b)}});
    to_partner(b.partner_id, "trust-exchange", "", Doc{{"peer", card_doc(a)}});
}

void GatewayNode::revoke_trust(const vo::BusinessCard& a, const vo::BusinessCard& b) {
    to_partner(a.partner_id, "trust-revoke", "", Doc{{"peer", card_doc(b)}});
    to_partner(b.partner_id, "trust-revoke", "", Doc{{"peer", card_doc(a)}});
}

void GatewayNode::push_policies(const std::string& partner_id, const std::string& collaboration_id,
                                const Doc& policy) {
    to_partner(partner_id, "policy", collaboration_id, Doc{{"policy", policy}});
}

void GatewayNode::enact_profile(const std::string& partner_id, const std::string& collaboration_id,
                                const std::string& profile_ref) {
    to_partner(partner_id, "enact", collaboration_id, Doc{{"profile-ref", profile_ref}});
}

void GatewayNode::swap_profile(const std::string& partner_id, const std::string& collaboration_id,
                               const ProfileRequest& request) {
    to_partner(partner_id, "swap", collaboration_id,
               Doc{{"request", profile_request_to_doc(request)}});
}

void GatewayNode::retire_profile(const std::string& partner_id,
                                 const std::string& collaboration_id) {
    to_partner(partner_id, "retire", collaboration_id, Doc::object());
}

// ---------------------------------------------------------------------------

Doc GatewayNode::handle_frame(const Frame& frame) {
    const std::string& type = frame.frame_type;
    const Doc& body = frame.body;

    if (type == "process-view") {
        process_views_[frame.ref_id] = body.at("view");
        return Doc{{"ack", true}};
    }
    if (type == "business-cards") {
        std::vector<vo::BusinessCard> cards;
        for (const auto& c : body.at("cards")) cards.push_back(vo::business_card_from_doc(c));
        cards_by_vo_[frame.ref_id] = cards;
        return Doc{{"ack", true}, {"count", cards.size()}};
    }
    if (type == "trust-exchange") {
        auto peer = vo::business_card_from_doc(body.at("peer"));
        trust_.register_peer(peer.fip_ref, peer.public_key);
        return Doc{{"ack", true}};
    }
    if (type == "trust-revoke") {
        auto peer = vo::business_card_from_doc(body.at("peer"));
        trust_.revoke_peer(peer.fip_ref);
        return Doc{{"ack", true}};
    }
    if (type == "policy") {
        policies_[frame.ref_id] = body.at("policy");
        return Doc{{"ack", true}};
    }
    if (type == "enact") {
        auto ref = body.at("profile-ref").get<std::string>();
        auto it = profiles_.find(ref);
        if (it == profiles_.end()) throw Error(Errc::PlanningFailed, "unknown profile " + ref);
        auto ccm = plan_request_or_throw(it->second);
        auto status = factory_.enact(ccm, frame.ref_id, Placement::Both,
                                     {LifecycleMode::Eager, {}}, now);
        // accept tokens signed with any federated peer's key for this collab
        std::string vo_id = frame.ref_id.substr(0, frame.ref_id.find(':'));
        auto cards = cards_by_vo_.find(vo_id);
        if (cards != cards_by_vo_.end())
            for (const auto& c : cards->second) trust_.trust_token(frame.ref_id, c.public_key);
        return status_to_doc(status);
    }
    if (type == "swap") {
        auto request = validate_profile_request(body.at("request"));
        auto ccm = plan_request_or_throw(request);
        return status_to_doc(factory_.swap_profile(frame.ref_id, ccm, now));
    }
    if (type == "retire") {
        factory_.retire(frame.ref_id);
        return Doc{{"ack", true}};
    }
    if (type == "message") {
        auto envelope = envelope_from_doc(body.at("envelope"));
        return intercept_to_doc(factory_.intercept(envelope, now));
    }
    if (type == "negotiate") {
        // single-exchange negotiation: we are the owner, the body names the
        // envelope profile we defend; the broker runs the rounds locally
        auto ref = body.at("envelope-ref").get<std::string>();
        auto it = profiles_.find(ref);
        if (it == profiles_.end()) throw Error(Errc::PlanningFailed, "unknown profile " + ref);
        auto offer = validate_profile_request(body.at("offer"));
        auto session = run_negotiation(frame.ref_id, {frame.sender, offer},
                                       {config_.gateway_id, it->second},
                                       config_.negotiation_max_rounds);
        return negotiation_to_doc(session);
    }

    // CLI-facing frames (loopback mode)
    if (type == "registry-publish") {
        const Doc& doc = body.at("descriptor");
        if (doc.contains("instance-id"))
            return Doc{{"published", registry_.publish_capability(capability_from_doc(doc))}};
        return Doc{{"published", registry_.publish_architecture(architecture_from_doc(doc))}};
    }
    if (type == "registry-list") {
        auto snapshot = registry_.snapshot();
        Doc out = Doc::array();
        if (body.contains("kind")) {
            auto kind = vas_kind_from_string(body.at("kind").get<std::string>());
            for (const auto& d : find_capabilities(snapshot, kind, {}))
                out.push_back(capability_to_doc(d));
        } else {
            for (auto kind : all_vas_kinds())
                for (const auto& d : find_capabilities(snapshot, kind, {}))
                    out.push_back(capability_to_doc(d));
        }
        return Doc{{"capabilities", out}};
    }
    if (type == "plan") {
        auto request = validate_profile_request(body.at("request"));
        return plan_locally(request).document;
    }
    if (type == "audit-dump") {
        auto entries = body.contains("collaboration-id")
                           ? audit_.entries_for(body.at("collaboration-id").get<std::string>())
                           : audit_.entries();
        Doc lines = Doc::array();
        for (const auto& e : entries) lines.push_back(audit_entry_line(e));
        return Doc{{"entries", lines}};
    }
    if (type == "profile-status") {
        auto status = factory_.status(frame.ref_id);
        if (!status) throw Error(Errc::NoProfile, frame.ref_id);
        return status_to_doc(*status);
    }
    if (type == "vo-create") {
        return vo::vo_record_to_doc(vos_.create_vo(frame.ref_id,
                                                   body.at("initiator").get<std::string>(),
                                                   body.value("vhe-ref", std::string("vhe"))));
    }
    if (type == "vo-attach") {
        std::vector<vo::ProcessStep> steps;
        for (const auto& s : body.at("process"))
            steps.push_back({s.at("role").get<std::string>(),
                             s.at("business-function").get<std::string>()});
        return vo::vo_record_to_doc(vos_.attach_process(frame.ref_id, std::move(steps)));
    }
    if (type == "vo-invite")
        return Doc{{"invitation-id", vos_.invite(frame.ref_id, body.at("partner").get<std::string>())}};
    if (type == "vo-respond")
        return vo::vo_record_to_doc(vos_.respond_invitation(
            body.at("invitation-id").get<std::string>(), body.at("accept").get<bool>(),
            body.value("profile", std::string())));
    if (type == "vo-finalize") return vo::vo_record_to_doc(vos_.finalize_federation(frame.ref_id));
    if (type == "vo-status") return vo::vo_record_to_doc(vos_.record(frame.ref_id));
    if (type == "vo-adapt") {
        const Doc& change = body.at("change");
        auto initiator = body.at("initiator").get<std::string>();
        auto kind = change.at("kind").get<std::string>();
        if (kind == "new-profile")
            return vo::vo_record_to_doc(vos_.adapt_vo(
                frame.ref_id, initiator,
                vo::NewProfile{change.at("partner").get<std::string>(),
                               validate_profile_request(change.at("request"))}));
        if (kind == "member-join")
            return vo::vo_record_to_doc(
                vos_.adapt_vo(frame.ref_id, initiator,
                              vo::MemberJoin{change.at("provider").get<std::string>(),
                                             change.at("profile").get<std::string>()}));
        if (kind == "member-leave")
            return vo::vo_record_to_doc(vos_.adapt_vo(
                frame.ref_id, initiator, vo::MemberLeave{change.at("partner").get<std::string>()}));
        throw Error(Errc::MalformedDocument, "unknown change kind " + kind);
    }

    throw Error(Errc::ProtocolViolation, "unknown frame type " + type);
}

}  // namespace spgw::gw
