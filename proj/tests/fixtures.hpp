#pragma once

// Shared registry fixtures used across the unit and acceptance suites,
// modeled on the jazz music store setting.

#include "spgw/registry/registry.hpp"

namespace spgw::fixtures {

inline CapabilityDescriptor capability(std::string id, std::string class_id, VasKind kind,
                                       double latency_ms, double failure_rate,
                                       ConstraintList offered = {},
                                       std::vector<SetupStep> steps = {}) {
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

inline ArchitectureDescription baseline_security() {
    ArchitectureDescription a;
    a.id = "Baseline-Security";
    a.category = "Security";
    a.mandatory = {VasKind::Authentication, VasKind::Authorisation};
    a.optional = {VasKind::Audit, VasKind::Billing, VasKind::Monitoring, VasKind::Translation,
                  VasKind::PolicyEnforcement};
    a.order = {{VasKind::Authentication, VasKind::Authorisation},
               {VasKind::Authorisation, VasKind::Audit}};
    return a;
}

inline ArchitectureDescription audit_only() {
    ArchitectureDescription a;
    a.id = "Audit-Only";
    a.category = "Compliance";
    a.mandatory = {VasKind::Audit};
    a.optional = {VasKind::Monitoring};
    return a;
}

inline ArchitectureDescription federated_authentication() {
    ArchitectureDescription a;
    a.id = "Federated-Authentication";
    a.category = "Authentication";
    a.mandatory = {VasKind::TokenIssuance, VasKind::TokenValidation};
    a.order = {{VasKind::TokenIssuance, VasKind::TokenValidation}};
    a.realizes = VasKind::Authentication;
    return a;
}

/// Registry with the three stock architectures and a capability instance per
/// core kind; authn comes in two instances of the same class.
inline void seed_music_store(RegistryStore& store) {
    store.publish_architecture(baseline_security());
    store.publish_architecture(audit_only());
    store.publish_architecture(federated_authentication());

    store.publish_capability(capability(
        "authn-01", "cls-token-authn", VasKind::Authentication, 20.0, 0.01,
        {Constraint::max_latency_ms(20), Constraint::semantics("XACML")}));
    store.publish_capability(capability(
        "authn-02", "cls-token-authn", VasKind::Authentication, 15.0, 0.20,
        {Constraint::max_latency_ms(20), Constraint::semantics("XACML")}));
    store.publish_capability(capability(
        "authz-01", "cls-rbac-authz", VasKind::Authorisation, 10.0, 0.02,
        {Constraint::max_latency_ms(10), Constraint::semantics("XACML")},
        {SetupStep{SetupStepKind::ConfigPush, "", Doc{{"allowed-roles", Doc::array({"buyer", "operator"})}}, nullptr}}));
    store.publish_capability(
        capability("audit-01", "cls-audit", VasKind::Audit, 5.0, 0.0));
    store.publish_capability(
        capability("billing-01", "cls-billing", VasKind::Billing, 8.0, 0.0));
    store.publish_capability(
        capability("monitor-01", "cls-monitor", VasKind::Monitoring, 2.0, 0.0));
    store.publish_capability(
        capability("translate-01", "cls-translate", VasKind::Translation, 12.0, 0.0,
                   {}, {SetupStep{SetupStepKind::ConfigPush, "",
                                  Doc{{"field", "lang"}, {"value", "en"}}, nullptr}}));
    store.publish_capability(
        capability("pep-01", "cls-pep", VasKind::PolicyEnforcement, 3.0, 0.0));
    store.publish_capability(
        capability("sts-issue-01", "cls-sts-issue", VasKind::TokenIssuance, 6.0, 0.0));
    store.publish_capability(
        capability("sts-check-01", "cls-sts-check", VasKind::TokenValidation, 6.0, 0.0));
}

inline ProfileRequest simple_request(std::vector<VasKind> kinds,
                                     AdaptabilityLevel level = AdaptabilityLevel::Open) {
    ProfileRequest r;
    r.owner_id = "owner-1";
    r.resource_id = "catalogue";
    for (auto k : kinds) r.wanted.push_back({k, {}});
    r.direction = Placement::Both;
    r.adaptability = level;
    return r;
}

}  // namespace spgw::fixtures
