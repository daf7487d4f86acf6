#include "spgw/core/model.hpp"

#include <algorithm>
#include <array>

namespace spgw {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::UnknownKind: return "UnknownKind";
        case Errc::DuplicateKind: return "DuplicateKind";
        case Errc::EmptyRequest: return "EmptyRequest";
        case Errc::MalformedConstraint: return "MalformedConstraint";
        case Errc::MalformedDocument: return "MalformedDocument";
        case Errc::DuplicateInstance: return "DuplicateInstance";
        case Errc::InvalidDescriptor: return "InvalidDescriptor";
        case Errc::NoAdmMatch: return "NoAdmMatch";
        case Errc::IncompleteProfile: return "IncompleteProfile";
        case Errc::ExclusionViolated: return "ExclusionViolated";
        case Errc::KindNotAllowed: return "KindNotAllowed";
        case Errc::UnsatisfiableSlot: return "UnsatisfiableSlot";
        case Errc::DepthExceeded: return "DepthExceeded";
        case Errc::CyclicArchitecture: return "CyclicArchitecture";
        case Errc::ApprovalRequired: return "ApprovalRequired";
        case Errc::RejectedByClient: return "RejectedByClient";
        case Errc::SetupFailed: return "SetupFailed";
        case Errc::ProfileConflict: return "ProfileConflict";
        case Errc::NoProfile: return "NoProfile";
        case Errc::Unavailable: return "Unavailable";
        case Errc::UnknownPartner: return "UnknownPartner";
        case Errc::NoMatchingFunction: return "NoMatchingFunction";
        case Errc::InvalidState: return "InvalidState";
        case Errc::UnknownInvitation: return "UnknownInvitation";
        case Errc::AlreadyAnswered: return "AlreadyAnswered";
        case Errc::RoleUncovered: return "RoleUncovered";
        case Errc::PlanningFailed: return "PlanningFailed";
        case Errc::NotAuthorized: return "NotAuthorized";
        case Errc::SessionClosed: return "SessionClosed";
        case Errc::ProtocolViolation: return "ProtocolViolation";
        case Errc::UnknownGateway: return "UnknownGateway";
        case Errc::Dropped: return "Dropped";
        case Errc::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

// ---------------------------------------------------------------------------
// VasKind

namespace {

constexpr std::array<std::pair<VasKind, const char*>, 9> kKindTags{{
    {VasKind::PolicyEnforcement, "policy-enforcement"},
    {VasKind::Authentication, "authentication"},
    {VasKind::Authorisation, "authorisation"},
    {VasKind::Audit, "audit"},
    {VasKind::Billing, "billing"},
    {VasKind::Translation, "translation"},
    {VasKind::Monitoring, "monitoring"},
    {VasKind::TokenIssuance, "token-issuance"},
    {VasKind::TokenValidation, "token-validation"},
}};

}  // namespace

const std::vector<VasKind>& all_vas_kinds() {
    static const std::vector<VasKind> kinds = [] {
        std::vector<VasKind> v;
        for (auto& [k, tag] : kKindTags) v.push_back(k);
        return v;
    }();
    return kinds;
}

std::string to_string(VasKind kind) {
    for (auto& [k, tag] : kKindTags)
        if (k == kind) return tag;
    return "unknown";
}

std::optional<VasKind> try_vas_kind(const std::string& tag) {
    for (auto& [k, t] : kKindTags)
        if (tag == t) return k;
    return std::nullopt;
}

VasKind vas_kind_from_string(const std::string& tag) {
    if (auto k = try_vas_kind(tag)) return *k;
    throw Error(Errc::UnknownKind, tag);
}

std::string to_string(Placement p) {
    switch (p) {
        case Placement::Request: return "request";
        case Placement::Response: return "response";
        case Placement::Both: return "both";
    }
    return "both";
}

Placement placement_from_string(const std::string& tag) {
    if (tag == "request") return Placement::Request;
    if (tag == "response") return Placement::Response;
    if (tag == "both") return Placement::Both;
    throw Error(Errc::MalformedConstraint, "placement: " + tag);
}

bool placement_covers(Placement offered, Placement required) {
    return offered == Placement::Both || offered == required;
}

// ---------------------------------------------------------------------------
// Constraints

Constraint Constraint::max_latency_ms(std::int64_t ms) {
    Constraint c;
    c.kind = ConstraintKind::QosMaxLatencyMs;
    c.bound = ms;
    return c;
}

Constraint Constraint::min_throughput_rps(std::int64_t rps) {
    Constraint c;
    c.kind = ConstraintKind::QosMinThroughputRps;
    c.bound = rps;
    return c;
}

Constraint Constraint::semantics(std::string tag) {
    Constraint c;
    c.kind = ConstraintKind::Semantics;
    c.semantics_tag = std::move(tag);
    return c;
}

Constraint Constraint::of_placement(Placement p) {
    Constraint c;
    c.kind = ConstraintKind::PlacementKind;
    c.placement = p;
    return c;
}

Doc constraint_to_doc(const Constraint& c) {
    Doc d = Doc::object();
    switch (c.kind) {
        case ConstraintKind::QosMaxLatencyMs: d["qos-max-latency-ms"] = c.bound; break;
        case ConstraintKind::QosMinThroughputRps: d["qos-min-throughput-rps"] = c.bound; break;
        case ConstraintKind::Semantics: d["semantics"] = c.semantics_tag; break;
        case ConstraintKind::PlacementKind: d["placement"] = to_string(c.placement); break;
    }
    return d;
}

Constraint constraint_from_doc(const Doc& d) {
    if (!d.is_object() || d.size() != 1)
        throw Error(Errc::MalformedConstraint, "constraint must be a single-field object");
    const auto& [key, value] = *d.items().begin();
    if (key == "qos-max-latency-ms" || key == "qos-min-throughput-rps") {
        if (!value.is_number_integer() || value.get<std::int64_t>() <= 0)
            throw Error(Errc::MalformedConstraint, key + " must be a positive integer");
        return key == "qos-max-latency-ms" ? Constraint::max_latency_ms(value.get<std::int64_t>())
                                           : Constraint::min_throughput_rps(value.get<std::int64_t>());
    }
    if (key == "semantics") {
        if (!value.is_string() || value.get<std::string>().empty())
            throw Error(Errc::MalformedConstraint, "semantics must be a non-empty string");
        return Constraint::semantics(value.get<std::string>());
    }
    if (key == "placement") {
        if (!value.is_string()) throw Error(Errc::MalformedConstraint, "placement must be a string");
        return Constraint::of_placement(placement_from_string(value.get<std::string>()));
    }
    throw Error(Errc::MalformedConstraint, key);
}

Doc constraints_to_doc(const ConstraintList& cs) {
    Doc d = Doc::array();
    for (const auto& c : cs) d.push_back(constraint_to_doc(c));
    return d;
}

ConstraintList constraints_from_doc(const Doc& d) {
    if (!d.is_array()) throw Error(Errc::MalformedConstraint, "constraints must be a list");
    ConstraintList cs;
    for (const auto& item : d) cs.push_back(constraint_from_doc(item));
    return cs;
}

namespace {

std::set<std::string> semantics_tags(const ConstraintList& cs) {
    std::set<std::string> tags;
    for (const auto& c : cs)
        if (c.kind == ConstraintKind::Semantics) tags.insert(c.semantics_tag);
    return tags;
}

std::optional<std::int64_t> best_bound(const ConstraintList& cs, ConstraintKind kind) {
    std::optional<std::int64_t> best;
    for (const auto& c : cs) {
        if (c.kind != kind) continue;
        if (!best) {
            best = c.bound;
        } else if (kind == ConstraintKind::QosMaxLatencyMs) {
            best = std::min(*best, c.bound);
        } else {
            best = std::max(*best, c.bound);
        }
    }
    return best;
}

Placement offered_placement(const ConstraintList& cs) {
    for (const auto& c : cs)
        if (c.kind == ConstraintKind::PlacementKind) return c.placement;
    return Placement::Both;  // absent placement covers everything
}

}  // namespace

bool constraint_satisfies(const ConstraintList& offered, const ConstraintList& required) {
    if (required.empty()) return true;

    const auto required_sem = semantics_tags(required);
    if (!required_sem.empty()) {
        const auto offered_sem = semantics_tags(offered);
        bool intersects = false;
        for (const auto& tag : required_sem)
            if (offered_sem.count(tag)) intersects = true;
        if (!intersects) return false;
    }

    for (const auto& r : required) {
        switch (r.kind) {
            case ConstraintKind::QosMaxLatencyMs: {
                auto o = best_bound(offered, ConstraintKind::QosMaxLatencyMs);
                if (!o || *o > r.bound) return false;
                break;
            }
            case ConstraintKind::QosMinThroughputRps: {
                auto o = best_bound(offered, ConstraintKind::QosMinThroughputRps);
                if (!o || *o < r.bound) return false;
                break;
            }
            case ConstraintKind::PlacementKind:
                if (!placement_covers(offered_placement(offered), r.placement)) return false;
                break;
            case ConstraintKind::Semantics:
                break;  // handled set-wise above
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Profile requests

std::string to_string(AdaptabilityLevel level) {
    switch (level) {
        case AdaptabilityLevel::Open: return "open";
        case AdaptabilityLevel::Guarded: return "guarded";
        case AdaptabilityLevel::Locked: return "locked";
    }
    return "guarded";
}

AdaptabilityLevel adaptability_from_string(const std::string& tag) {
    if (tag == "open") return AdaptabilityLevel::Open;
    if (tag == "guarded") return AdaptabilityLevel::Guarded;
    if (tag == "locked") return AdaptabilityLevel::Locked;
    throw Error(Errc::MalformedDocument, "adaptability: " + tag);
}

ProfileRequest validate_profile_request(const Doc& document) {
    if (!document.is_object()) throw Error(Errc::MalformedDocument, "request must be an object");

    ProfileRequest req;
    req.owner_id = document.value("owner-id", "");
    req.resource_id = document.value("resource-id", "");
    req.direction = document.contains("direction")
                        ? placement_from_string(document.at("direction").get<std::string>())
                        : Placement::Both;
    req.adaptability = document.contains("adaptability")
                           ? adaptability_from_string(document.at("adaptability").get<std::string>())
                           : AdaptabilityLevel::Guarded;

    if (!document.contains("wanted") || !document.at("wanted").is_array())
        throw Error(Errc::EmptyRequest, "wanted list missing");
    const auto& wanted = document.at("wanted");
    if (wanted.empty()) throw Error(Errc::EmptyRequest, "wanted list is empty");

    std::set<VasKind> seen;
    for (const auto& entry : wanted) {
        WantedEntry w;
        if (entry.is_string()) {
            w.kind = vas_kind_from_string(entry.get<std::string>());
        } else if (entry.is_object()) {
            if (!entry.contains("kind")) throw Error(Errc::MalformedDocument, "wanted entry lacks kind");
            w.kind = vas_kind_from_string(entry.at("kind").get<std::string>());
            if (entry.contains("constraints")) w.constraints = constraints_from_doc(entry.at("constraints"));
        } else {
            throw Error(Errc::MalformedDocument, "wanted entry must be a tag or object");
        }
        if (!seen.insert(w.kind).second) throw Error(Errc::DuplicateKind, to_string(w.kind));
        // constraint placement must be consistent with the request direction
        for (const auto& c : w.constraints) {
            if (c.kind == ConstraintKind::PlacementKind &&
                !placement_covers(req.direction, c.placement)) {
                throw Error(Errc::MalformedConstraint,
                            "placement " + to_string(c.placement) + " outside request direction " +
                                to_string(req.direction));
            }
        }
        req.wanted.push_back(std::move(w));
    }

    if (document.contains("preferred-architecture")) {
        const auto& pa = document.at("preferred-architecture");
        if (!pa.is_object() || !pa.contains("category") || !pa.contains("name"))
            throw Error(Errc::MalformedDocument, "preferred-architecture needs category and name");
        req.preferred_architecture = {pa.at("category").get<std::string>(),
                                      pa.at("name").get<std::string>()};
    }
    return req;
}

Doc profile_request_to_doc(const ProfileRequest& request) {
    Doc d = Doc::object();
    d["owner-id"] = request.owner_id;
    d["resource-id"] = request.resource_id;
    Doc wanted = Doc::array();
    for (const auto& w : request.wanted) {
        Doc entry = Doc::object();
        entry["kind"] = to_string(w.kind);
        entry["constraints"] = constraints_to_doc(w.constraints);
        wanted.push_back(entry);
    }
    d["wanted"] = wanted;
    d["direction"] = to_string(request.direction);
    d["adaptability"] = to_string(request.adaptability);
    if (request.preferred_architecture) {
        d["preferred-architecture"] = {{"category", request.preferred_architecture->first},
                                       {"name", request.preferred_architecture->second}};
    }
    return d;
}

// ---------------------------------------------------------------------------
// Composition models

std::string to_string(SlotOrigin o) {
    return o == SlotOrigin::ClientRequested ? "client-requested" : "system-added";
}

namespace {

SlotOrigin origin_from_string(const std::string& tag) {
    if (tag == "client-requested") return SlotOrigin::ClientRequested;
    if (tag == "system-added") return SlotOrigin::SystemAdded;
    throw Error(Errc::MalformedDocument, "origin: " + tag);
}

}  // namespace

Doc agcm_to_doc(const Agcm& m) {
    Doc d = Doc::object();
    d["adm-ref"] = m.adm_ref;
    Doc slots = Doc::array();
    for (const auto& s : m.slots) {
        Doc sd = Doc::object();
        sd["slot-id"] = s.slot_id;
        sd["kind"] = to_string(s.kind);
        sd["constraints"] = constraints_to_doc(s.constraints);
        sd["origin"] = to_string(s.origin);
        slots.push_back(sd);
    }
    d["slots"] = slots;
    return d;
}

Agcm agcm_from_doc(const Doc& d) {
    Agcm m;
    m.adm_ref = d.at("adm-ref").get<std::string>();
    for (const auto& sd : d.at("slots")) {
        AgcmSlot s;
        s.slot_id = sd.at("slot-id").get<std::string>();
        s.kind = vas_kind_from_string(sd.at("kind").get<std::string>());
        s.constraints = constraints_from_doc(sd.at("constraints"));
        s.origin = origin_from_string(sd.at("origin").get<std::string>());
        m.slots.push_back(std::move(s));
    }
    return m;
}

Doc ascm_to_doc(const Ascm& m) {
    Doc d = Doc::object();
    d["agcm"] = agcm_to_doc(m.agcm);
    Doc bindings = Doc::object();
    for (const auto& [slot_id, b] : m.bindings) {
        if (b.is_nested()) {
            bindings[slot_id] = Doc{{"nested", ascm_to_doc(*b.nested)}};
        } else {
            bindings[slot_id] = Doc{{"capability-class", b.capability_class}};
        }
    }
    d["bindings"] = bindings;
    return d;
}

Ascm ascm_from_doc(const Doc& d) {
    Ascm m;
    m.agcm = agcm_from_doc(d.at("agcm"));
    for (const auto& [slot_id, bd] : d.at("bindings").items()) {
        AscmBinding b;
        if (bd.contains("nested")) {
            b.nested = std::make_shared<Ascm>(ascm_from_doc(bd.at("nested")));
        } else {
            b.capability_class = bd.at("capability-class").get<std::string>();
        }
        m.bindings[slot_id] = std::move(b);
    }
    return m;
}

bool ascm_equal(const Ascm& a, const Ascm& b) { return ascm_to_doc(a) == ascm_to_doc(b); }

std::string to_string(SetupStepKind k) {
    switch (k) {
        case SetupStepKind::TrustBootstrap: return "trust-bootstrap";
        case SetupStepKind::ConfigPush: return "config-push";
        case SetupStepKind::None: return "none";
    }
    return "none";
}

namespace {

SetupStepKind setup_step_kind_from_string(const std::string& tag) {
    if (tag == "trust-bootstrap") return SetupStepKind::TrustBootstrap;
    if (tag == "config-push") return SetupStepKind::ConfigPush;
    if (tag == "none") return SetupStepKind::None;
    throw Error(Errc::MalformedDocument, "step-kind: " + tag);
}

Doc setup_step_to_doc(const SetupStep& s) {
    Doc d = Doc::object();
    d["step-kind"] = to_string(s.kind);
    if (s.kind == SetupStepKind::TrustBootstrap) d["peer-ref"] = s.peer_ref;
    if (s.kind == SetupStepKind::ConfigPush) d["document"] = s.document;
    if (!s.params.is_null()) d["params"] = s.params;
    return d;
}

SetupStep setup_step_from_doc(const Doc& d) {
    SetupStep s;
    s.kind = setup_step_kind_from_string(d.at("step-kind").get<std::string>());
    if (s.kind == SetupStepKind::TrustBootstrap) s.peer_ref = d.at("peer-ref").get<std::string>();
    if (s.kind == SetupStepKind::ConfigPush) s.document = d.at("document");
    if (d.contains("params")) s.params = d.at("params");
    return s;
}

}  // namespace

Doc ccm_to_doc(const Ccm& m) {
    Doc d = Doc::object();
    d["ascm"] = ascm_to_doc(m.ascm);
    Doc ib = Doc::object();
    for (const auto& [path, b] : m.instance_bindings)
        ib[path] = Doc{{"instance-id", b.instance_id}, {"endpoint", b.endpoint}};
    d["instance-bindings"] = ib;
    Doc plan = Doc::array();
    for (const auto& p : m.setup_plan) {
        Doc pd = Doc::object();
        pd["slot"] = p.slot_path;
        pd["instance-id"] = p.instance_id;
        pd["step"] = setup_step_to_doc(p.step);
        plan.push_back(pd);
    }
    d["setup-plan"] = plan;
    d["score"] = m.score;
    return d;
}

Ccm ccm_from_doc(const Doc& d) {
    Ccm m;
    m.ascm = ascm_from_doc(d.at("ascm"));
    for (const auto& [path, bd] : d.at("instance-bindings").items())
        m.instance_bindings[path] = {bd.at("instance-id").get<std::string>(),
                                     bd.at("endpoint").get<std::string>()};
    for (const auto& pd : d.at("setup-plan")) {
        PlannedSetupStep p;
        p.slot_path = pd.at("slot").get<std::string>();
        p.instance_id = pd.at("instance-id").get<std::string>();
        p.step = setup_step_from_doc(pd.at("step"));
        m.setup_plan.push_back(std::move(p));
    }
    m.score = d.at("score").get<double>();
    return m;
}

bool ccm_equal(const Ccm& a, const Ccm& b) { return ccm_to_doc(a) == ccm_to_doc(b); }

namespace {

void collect_leaves(const Ascm& ascm, const std::string& prefix, std::vector<LeafSlot>& out) {
    for (const auto& slot : ascm.agcm.slots) {
        auto it = ascm.bindings.find(slot.slot_id);
        if (it == ascm.bindings.end()) continue;  // unbound slots have no leaves
        const std::string path = prefix.empty() ? slot.slot_id : prefix + "/" + slot.slot_id;
        if (it->second.is_nested()) {
            collect_leaves(*it->second.nested, path, out);
        } else {
            out.push_back({path, slot.slot_id, slot.kind, slot.constraints,
                           it->second.capability_class});
        }
    }
}

}  // namespace

std::vector<LeafSlot> leaf_slots(const Ascm& ascm) {
    std::vector<LeafSlot> out;
    collect_leaves(ascm, "", out);
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t ccm_content_hash(const Ccm& m) { return fnv1a(ccm_to_doc(m).dump()); }

// ---------------------------------------------------------------------------
// Secured profiles / envelopes

std::string to_string(LifecycleMode m) {
    switch (m) {
        case LifecycleMode::Eager: return "eager";
        case LifecycleMode::Scheduled: return "scheduled";
        case LifecycleMode::OnDemand: return "on-demand";
    }
    return "eager";
}

std::string to_string(ProfileState s) {
    switch (s) {
        case ProfileState::Validated: return "validated";
        case ProfileState::Enacted: return "enacted";
        case ProfileState::Active: return "active";
        case ProfileState::Dormant: return "dormant";
        case ProfileState::Latent: return "latent";
        case ProfileState::Retired: return "retired";
    }
    return "validated";
}

std::string to_string(Direction d) { return d == Direction::Request ? "request" : "response"; }

Direction direction_from_string(const std::string& tag) {
    if (tag == "request") return Direction::Request;
    if (tag == "response") return Direction::Response;
    throw Error(Errc::MalformedDocument, "direction: " + tag);
}

Doc envelope_to_doc(const MessageEnvelope& e) {
    Doc d = Doc::object();
    d["collaboration-id"] = e.collaboration_id;
    d["direction"] = to_string(e.direction);
    Doc headers = Doc::object();
    for (const auto& [k, v] : e.headers) headers[k] = v;
    d["headers"] = headers;
    d["payload"] = e.payload;
    return d;
}

MessageEnvelope envelope_from_doc(const Doc& d) {
    MessageEnvelope e;
    e.collaboration_id = d.at("collaboration-id").get<std::string>();
    e.direction = direction_from_string(d.at("direction").get<std::string>());
    if (d.contains("headers"))
        for (const auto& [k, v] : d.at("headers").items()) e.headers[k] = v.get<std::string>();
    e.payload = d.value("payload", "");
    return e;
}

bool collaboration_id_well_formed(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '_' || c == ':' || c == '-';
        if (!ok) return false;
    }
    return true;
}

}  // namespace spgw
