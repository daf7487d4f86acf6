#include "spgw/gateway/scenario.hpp"

#include <memory>
#include <random>

#include "spgw/gateway/gateway.hpp"

namespace spgw::gw {

namespace {

CapabilityDescriptor capability(std::string id, std::string class_id, VasKind kind,
                                double latency_ms, double failure_rate,
                                ConstraintList offered = {}, std::vector<SetupStep> steps = {}) {
    CapabilityDescriptor d;
    d.instance_id = std::move(id);
    d.class_id = std::move(class_id);
    d.kind = kind;
    d.endpoint = "sim://" + d.instance_id;
    d.measured_latency_ms = latency_ms;
    d.measured_failure_rate = failure_rate;
    d.offered = std::move(offered);
    d.setup_steps = std::move(steps);
    return d;
}

/// Stocks one gateway's registries with the security architecture and a VAS
/// instance per kind the scenario profiles use.
void seed_registry(RegistryStore& store) {
    ArchitectureDescription baseline;
    baseline.id = "Baseline-Security";
    baseline.category = "Security";
    baseline.mandatory = {VasKind::Authentication, VasKind::Authorisation};
    baseline.optional = {VasKind::Audit, VasKind::Billing, VasKind::Monitoring,
                         VasKind::Translation, VasKind::PolicyEnforcement};
    baseline.order = {{VasKind::Authentication, VasKind::Authorisation},
                      {VasKind::Authorisation, VasKind::Audit}};
    store.publish_architecture(baseline);

    store.publish_capability(capability("authn-01", "cls-token-authn", VasKind::Authentication,
                                        20.0, 0.01,
                                        {Constraint::max_latency_ms(20), Constraint::semantics("XACML")}));
    store.publish_capability(capability(
        "authz-01", "cls-rbac-authz", VasKind::Authorisation, 10.0, 0.02,
        {Constraint::max_latency_ms(10), Constraint::semantics("XACML")},
        {SetupStep{SetupStepKind::ConfigPush, "",
                   Doc{{"allowed-roles", Doc::array({"buyer", "operator"})}}, nullptr}}));
    store.publish_capability(capability("audit-01", "cls-audit", VasKind::Audit, 5.0, 0.0));
    store.publish_capability(capability("billing-01", "cls-billing", VasKind::Billing, 8.0, 0.0));
    store.publish_capability(capability("monitor-01", "cls-monitor", VasKind::Monitoring, 2.0, 0.0));
}

ProfileRequest named_profile(const std::string& owner, std::vector<VasKind> kinds) {
    ProfileRequest r;
    r.owner_id = owner;
    r.resource_id = "catalogue";
    for (auto k : kinds) r.wanted.push_back({k, {}});
    r.direction = Placement::Both;
    r.adaptability = AdaptabilityLevel::Open;
    r.preferred_architecture = {{"Security", "Baseline-Security"}};
    return r;
}

struct World {
    Network network;
    std::map<std::string, std::unique_ptr<GatewayNode>> nodes;

    GatewayNode& node(const std::string& id) { return *nodes.at(id); }

    GatewayNode& add(const std::string& id) {
        GatewayConfig c;
        c.gateway_id = id;
        auto node = std::make_unique<GatewayNode>(c, network);
        auto& ref = *node;
        nodes[id] = std::move(node);
        return ref;
    }
};

}  // namespace

ScenarioResult run_music_store_scenario(const ScenarioOptions& options) {
    ScenarioResult result;
    Doc& report = result.report;
    report["scenario"] = "music-store";
    report["seed"] = options.seed;
    Doc steps = Doc::array();
    std::string current_step;

    try {
        // four gateways: the VHE host plus one per business partner
        World world;
        auto& infra = world.add("infra-gw");
        world.add("operator-gw");
        world.add("content-a-gw");
        world.add("content-b-gw");

        const std::vector<std::pair<std::string, std::string>> partners = {
            {"operator", "operator-gw"},
            {"content-a", "content-a-gw"},
            {"content-b", "content-b-gw"}};
        for (const auto& [partner, gw] : partners) {
            std::string role = partner == "operator" ? "operator" : "content-provider";
            std::vector<std::string> functions =
                partner == "operator" ? std::vector<std::string>{"storefront"}
                                      : std::vector<std::string>{"serve-jazz"};
            infra.register_partner(
                {gw, {partner, role, "fip-" + partner, "pk-" + partner}, functions});
            seed_registry(world.node(gw).registry());
        }
        world.node("operator-gw").register_profile(
            "default", named_profile("operator", {VasKind::Authentication, VasKind::Authorisation,
                                                  VasKind::Audit}));
        world.node("content-a-gw").register_profile(
            "standard-security",
            named_profile("content-a", {VasKind::Authentication, VasKind::Authorisation,
                                        VasKind::Audit, VasKind::Billing}));
        world.node("content-b-gw").register_profile(
            "strict-authz",
            named_profile("content-b", {VasKind::Authentication, VasKind::Authorisation,
                                        VasKind::Audit, VasKind::Monitoring}));

        // --- foundation -----------------------------------------------------
        current_step = "foundation";
        infra.vos().create_vo("jazz-store", "operator", "vhe-1");
        auto vo = infra.vos().attach_process(
            "jazz-store", {{"operator", "storefront"}, {"content-provider", "serve-jazz"}});
        steps.push_back(Doc{{"step", "foundation"}, {"vo-state", vo::to_string(vo.state)}});

        // --- negotiation ----------------------------------------------------
        // the operator checks terms with content-a before inviting it
        current_step = "negotiation";
        ProfileRequest offer = named_profile("operator", {VasKind::Authorisation});
        offer.wanted[0].constraints = {Constraint::semantics("XACML"),
                                       Constraint::max_latency_ms(50)};
        ProfileRequest envelope = named_profile("content-a", {VasKind::Authorisation});
        envelope.wanted[0].constraints = {Constraint::semantics("XACML"),
                                          Constraint::semantics("SecPAL"),
                                          Constraint::max_latency_ms(10)};
        world.node("content-a-gw").register_profile("terms", envelope);
        Frame negotiate_frame{"negotiate", "session-1", "operator-gw", 1,
                              Doc{{"envelope-ref", "terms"},
                                  {"offer", profile_request_to_doc(offer)}}};
        Doc negotiated = world.network.route("operator-gw", "content-a-gw", negotiate_frame);
        steps.push_back(Doc{{"step", "negotiation"},
                            {"status", negotiated.at("status")},
                            {"rounds", negotiated.at("round")}});

        // --- federation -----------------------------------------------------
        current_step = "federation";
        if (options.drop_creation_order)
            world.network.inject_drop("infra-gw", "content-a-gw", -1);
        auto inv_a = infra.vos().invite("jazz-store", "content-a");
        auto inv_b = infra.vos().invite("jazz-store", "content-b");
        infra.vos().respond_invitation(inv_a, true, "standard-security");
        infra.vos().respond_invitation(inv_b, true, "strict-authz");
        vo = infra.vos().finalize_federation("jazz-store");
        Doc collabs = Doc::object();
        for (const auto& [partner, collab] : vo.collaboration_ids) collabs[partner] = collab;
        steps.push_back(Doc{{"step", "federation"},
                            {"vo-state", vo::to_string(vo.state)},
                            {"members", vo.business_cards.size()},
                            {"trust-edges", vo.trust_edges.size()},
                            {"collaboration-ids", collabs}});

        // --- virtualization check -------------------------------------------
        current_step = "virtualization";
        Doc chains = Doc::object();
        for (const auto& [partner, gw] : partners) {
            auto status = world.node(gw).factory().status("jazz-store:" + partner);
            if (!status) throw Error(Errc::NoProfile, partner);
            chains[partner] = status->chain;
        }
        steps.push_back(Doc{{"step", "virtualization"}, {"chains", chains}});

        // --- traffic --------------------------------------------------------
        current_step = "traffic";
        std::mt19937 rng(static_cast<std::uint32_t>(options.seed));
        const std::vector<std::string> tracks = {"take-five", "so-what", "blue-in-green",
                                                 "naima", "moanin"};
        int forwarded = 0, sent = 0;
        for (const auto& [to_partner, to_gw] : partners) {
            for (const auto& [from_partner, from_gw] : partners) {
                if (from_partner == to_partner) continue;
                for (int i = 0; i < 2; ++i) {
                    MessageEnvelope e;
                    e.collaboration_id = "jazz-store:" + to_partner;
                    e.direction = Direction::Request;
                    e.headers["token"] = "pk-" + from_partner;  // trusted via federation
                    e.headers["sender-role"] = from_partner == "operator" ? "operator" : "buyer";
                    const auto& track = tracks[rng() % tracks.size()];
                    e.payload = Doc{{"action", i == 0 ? "search" : "purchase"},
                                    {"track", track}}.dump();
                    Doc verdict = world.node(from_gw).send_message(to_gw, e);
                    sent++;
                    if (verdict.at("status") == "forwarded") forwarded++;
                }
            }
        }
        steps.push_back(Doc{{"step", "traffic"}, {"sent", sent}, {"forwarded", forwarded}});

        // --- adaptation -----------------------------------------------------
        current_step = "adaptation";
        auto refined = named_profile(
            "content-a", {VasKind::Authentication, VasKind::Authorisation, VasKind::Audit,
                          VasKind::Billing, VasKind::Monitoring});
        vo = infra.vos().adapt_vo("jazz-store", "content-a", vo::NewProfile{"content-a", refined});
        auto swapped = world.node("content-a-gw").factory().status("jazz-store:content-a");

        MessageEnvelope forged;
        forged.collaboration_id = "jazz-store:content-a";
        forged.direction = Direction::Request;
        forged.headers["token"] = "forged-token";
        forged.headers["sender-role"] = "buyer";
        forged.payload = Doc{{"action", "purchase"}, {"track", tracks[0]}}.dump();
        Doc rejected = world.node("operator-gw").send_message("content-a-gw", forged);
        steps.push_back(Doc{{"step", "adaptation"},
                            {"vo-state", vo::to_string(vo.state)},
                            {"swapped-chain", swapped ? Doc(swapped->chain) : Doc()},
                            {"forged-message", rejected}});

        // --- report ---------------------------------------------------------
        report["steps"] = steps;
        Doc digests = Doc::object();
        char buffer[17];
        for (const auto& [id, node] : world.nodes) {
            std::snprintf(buffer, sizeof buffer, "%016llx",
                          static_cast<unsigned long long>(fnv1a(node->audit().dump())));
            digests[id] = buffer;
        }
        report["audit-digests"] = digests;
        report["vo-state"] = vo::to_string(infra.vos().record("jazz-store").state);
        report["frames-delivered"] = world.network.delivered_count();
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.failed_step = current_step;
        result.error = e.what();
        report["steps"] = steps;
        report["failed-step"] = current_step;
        report["error"] = e.what();
    }
    return result;
}

}  // namespace spgw::gw
