#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spgw/factory/sp_factory.hpp"
#include "spgw/gateway/frame.hpp"
#include "spgw/gateway/negotiation.hpp"
#include "spgw/plan/planner.hpp"
#include "spgw/registry/registry.hpp"
#include "spgw/vo/vo_manager.hpp"

namespace spgw::gw {

struct GatewayConfig {
    std::string gateway_id;
    std::string listen_address;  // "sim" or host:port for the loopback server
    std::string registry_journal;
    int depth_limit = 3;
    double latency_weight = 1.0 / 100.0;
    double failure_weight = 10.0;
    double history_weight = 5.0;
    int negotiation_max_rounds = 4;
    std::int64_t scenario_seed = 1;
};

GatewayConfig config_from_doc(const Doc& d);  // throws ConfigError
Doc config_to_doc(const GatewayConfig& c);

/// One partner's entry in a gateway's directory: where to reach them, who
/// they are and what they publish.
struct PartnerEntry {
    std::string gateway_id;
    vo::BusinessCard card;
    std::vector<std::string> business_functions;
};

/// The printable result of a local planning run.
struct PlanOutcomeDoc {
    plan::PlanOutcome outcome;
    Doc document;
};

/// One B2B gateway: local registries, the enactment factory, hosted VOs and
/// the frame handler that serves its side of the inter-gateway protocol.
/// A gateway hosting a VO drives the lifecycle side effects by sending
/// frames to the member partners' gateways.
class GatewayNode : public vo::VoHost {
public:
    GatewayNode(GatewayConfig config, Network& network);

    const std::string& id() const { return config_.gateway_id; }
    const GatewayConfig& config() const { return config_; }

    RegistryStore& registry() { return registry_; }
    TrustStore& trust() { return trust_; }
    AuditLog& audit() { return audit_; }
    SpFactory& factory() { return factory_; }
    vo::VoManager& vos() { return vos_; }

    /// Local partner bootstrap (the partner announces itself to this host).
    void register_partner(const PartnerEntry& entry);
    /// Registers a named profile request owned by a local partner.
    void register_profile(const std::string& name, const ProfileRequest& request);

    PlanOutcomeDoc plan_locally(const ProfileRequest& request);
    InterceptResult deliver(const MessageEnvelope& envelope);

    /// Sends a message envelope to the partner gateway holding the target
    /// collaboration's profile; returns the intercept verdict document.
    Doc send_message(const std::string& to_gateway, const MessageEnvelope& envelope);

    Doc handle_frame(const Frame& frame);  // the network-facing entry point

    // received state, inspectable by tests and the scenario report
    const std::map<std::string, std::vector<vo::BusinessCard>>& cards_by_vo() const {
        return cards_by_vo_;
    }
    const std::map<std::string, Doc>& policies() const { return policies_; }
    const std::map<std::string, Doc>& process_views() const { return process_views_; }

    // vo::VoHost (side effects routed to the partners' gateways)
    bool partner_registered(const std::string& partner_id) const override;
    std::vector<std::string> business_functions(const std::string& partner_id) const override;
    vo::BusinessCard business_card(const std::string& partner_id) const override;
    void deliver_process_view(const std::string& partner_id, const std::string& vo_id,
                              const Doc& process_view) override;
    void distribute_cards(const std::string& partner_id, const std::string& vo_id,
                          const std::vector<vo::BusinessCard>& cards) override;
    void establish_trust(const vo::BusinessCard& a, const vo::BusinessCard& b) override;
    void revoke_trust(const vo::BusinessCard& a, const vo::BusinessCard& b) override;
    void push_policies(const std::string& partner_id, const std::string& collaboration_id,
                       const Doc& policy) override;
    void enact_profile(const std::string& partner_id, const std::string& collaboration_id,
                       const std::string& profile_ref) override;
    void swap_profile(const std::string& partner_id, const std::string& collaboration_id,
                      const ProfileRequest& request) override;
    void retire_profile(const std::string& partner_id,
                        const std::string& collaboration_id) override;

    Tick now = 0;  // logical clock, advanced by the harness

private:
    const PartnerEntry& require_partner(const std::string& partner_id) const;
    Doc to_partner(const std::string& partner_id, const std::string& frame_type,
                   const std::string& ref_id, Doc body);
    Ccm plan_request_or_throw(const ProfileRequest& request);

    GatewayConfig config_;
    Network& network_;
    RegistryStore registry_;
    TrustStore trust_;
    AuditLog audit_;
    SpFactory factory_;
    vo::VoManager vos_;

    std::map<std::string, PartnerEntry> directory_;       // partner-id -> entry
    std::map<std::string, ProfileRequest> profiles_;      // named profile requests
    std::map<std::string, std::vector<vo::BusinessCard>> cards_by_vo_;
    std::map<std::string, Doc> policies_;       // collaboration-id -> policy
    std::map<std::string, Doc> process_views_;  // vo-id -> process view
};

}  // namespace spgw::gw
