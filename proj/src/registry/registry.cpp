#include "spgw/registry/registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace spgw {

// ---------------------------------------------------------------------------
// Serialization

Doc capability_to_doc(const CapabilityDescriptor& d) {
    Doc doc = Doc::object();
    doc["instance-id"] = d.instance_id;
    doc["class-id"] = d.class_id;
    doc["kind"] = to_string(d.kind);
    doc["endpoint"] = d.endpoint;
    doc["offered"] = constraints_to_doc(d.offered);
    doc["measured"] = {{"latency-ms", d.measured_latency_ms},
                       {"failure-rate", d.measured_failure_rate}};
    Doc steps = Doc::array();
    for (const auto& s : d.setup_steps) {
        Doc sd = Doc::object();
        sd["step-kind"] = to_string(s.kind);
        if (s.kind == SetupStepKind::TrustBootstrap) sd["peer-ref"] = s.peer_ref;
        if (s.kind == SetupStepKind::ConfigPush) sd["document"] = s.document;
        if (!s.params.is_null()) sd["params"] = s.params;
        steps.push_back(sd);
    }
    doc["setup-steps"] = steps;
    return doc;
}

CapabilityDescriptor capability_from_doc(const Doc& d) {
    CapabilityDescriptor c;
    c.instance_id = d.at("instance-id").get<std::string>();
    c.class_id = d.at("class-id").get<std::string>();
    c.kind = vas_kind_from_string(d.at("kind").get<std::string>());
    c.endpoint = d.value("endpoint", "");
    if (d.contains("offered")) c.offered = constraints_from_doc(d.at("offered"));
    if (d.contains("measured")) {
        c.measured_latency_ms = d.at("measured").value("latency-ms", 1.0);
        c.measured_failure_rate = d.at("measured").value("failure-rate", 0.0);
    }
    if (d.contains("setup-steps")) {
        for (const auto& sd : d.at("setup-steps")) {
            SetupStep s;
            const auto tag = sd.at("step-kind").get<std::string>();
            if (tag == "trust-bootstrap") {
                s.kind = SetupStepKind::TrustBootstrap;
                s.peer_ref = sd.at("peer-ref").get<std::string>();
            } else if (tag == "config-push") {
                s.kind = SetupStepKind::ConfigPush;
                s.document = sd.at("document");
            } else if (tag == "none") {
                s.kind = SetupStepKind::None;
            } else {
                throw Error(Errc::InvalidDescriptor, "step-kind: " + tag);
            }
            if (sd.contains("params")) s.params = sd.at("params");
            c.setup_steps.push_back(std::move(s));
        }
    }
    return c;
}

namespace {

Doc kind_pairs_to_doc(const std::vector<std::pair<VasKind, VasKind>>& pairs) {
    Doc d = Doc::array();
    for (const auto& [a, b] : pairs) d.push_back(Doc::array({to_string(a), to_string(b)}));
    return d;
}

std::vector<std::pair<VasKind, VasKind>> kind_pairs_from_doc(const Doc& d) {
    std::vector<std::pair<VasKind, VasKind>> out;
    for (const auto& p : d)
        out.emplace_back(vas_kind_from_string(p.at(0).get<std::string>()),
                         vas_kind_from_string(p.at(1).get<std::string>()));
    return out;
}

Doc kind_set_to_doc(const std::set<VasKind>& s) {
    Doc d = Doc::array();
    for (auto k : s) d.push_back(to_string(k));
    return d;
}

std::set<VasKind> kind_set_from_doc(const Doc& d) {
    std::set<VasKind> out;
    for (const auto& k : d) out.insert(vas_kind_from_string(k.get<std::string>()));
    return out;
}

}  // namespace

Doc architecture_to_doc(const ArchitectureDescription& d) {
    Doc doc = Doc::object();
    doc["id"] = d.id;
    doc["category"] = d.category;
    doc["mandatory"] = kind_set_to_doc(d.mandatory);
    doc["optional"] = kind_set_to_doc(d.optional);
    doc["order"] = kind_pairs_to_doc(d.order);
    doc["exclusions"] = kind_pairs_to_doc(d.exclusions);
    if (d.realizes) doc["realizes"] = to_string(*d.realizes);
    return doc;
}

ArchitectureDescription architecture_from_doc(const Doc& d) {
    ArchitectureDescription a;
    a.id = d.at("id").get<std::string>();
    a.category = d.at("category").get<std::string>();
    a.mandatory = kind_set_from_doc(d.at("mandatory"));
    if (d.contains("optional")) a.optional = kind_set_from_doc(d.at("optional"));
    if (d.contains("order")) a.order = kind_pairs_from_doc(d.at("order"));
    if (d.contains("exclusions")) a.exclusions = kind_pairs_from_doc(d.at("exclusions"));
    if (d.contains("realizes")) a.realizes = vas_kind_from_string(d.at("realizes").get<std::string>());
    return a;
}

double ClientRecord::acceptance_degree() const {
    if (decisions.empty()) return 1.0;
    std::int64_t accepted = 0;
    for (const auto& [id, ok] : decisions)
        if (ok) ++accepted;
    return static_cast<double>(accepted) / static_cast<double>(decisions.size());
}

Doc client_record_to_doc(const ClientRecord& r) {
    Doc d = Doc::object();
    d["owner-id"] = r.owner_id;
    Doc history = Doc::array();
    for (const auto& req : r.history) history.push_back(profile_request_to_doc(req));
    d["request-history"] = history;
    Doc cache = Doc::object();
    for (const auto& [k, v] : r.stage_cache) cache[k] = v;
    d["stage-cache"] = cache;
    Doc decisions = Doc::array();
    for (const auto& [id, ok] : r.decisions)
        decisions.push_back(Doc{{"ccm-id", id}, {"accepted", ok}});
    d["decisions"] = decisions;
    Doc usage = Doc::object();
    for (const auto& [k, v] : r.usage_counts) usage[k] = v;
    d["usage-count"] = usage;
    Doc failures = Doc::object();
    for (const auto& [k, v] : r.failure_counts) failures[k] = v;
    d["failure-count"] = failures;
    d["acceptance-degree"] = r.acceptance_degree();
    return d;
}

ClientRecord client_record_from_doc(const Doc& d) {
    ClientRecord r;
    r.owner_id = d.at("owner-id").get<std::string>();
    for (const auto& req : d.at("request-history")) r.history.push_back(validate_profile_request(req));
    for (const auto& [k, v] : d.at("stage-cache").items()) r.stage_cache[k] = v;
    for (const auto& dec : d.at("decisions"))
        r.decisions.emplace_back(dec.at("ccm-id").get<std::string>(), dec.at("accepted").get<bool>());
    for (const auto& [k, v] : d.at("usage-count").items()) r.usage_counts[k] = v.get<std::int64_t>();
    for (const auto& [k, v] : d.at("failure-count").items()) r.failure_counts[k] = v.get<std::int64_t>();
    return r;
}

// ---------------------------------------------------------------------------
// Validation

void validate_capability(const CapabilityDescriptor& d) {
    if (d.instance_id.empty()) throw Error(Errc::InvalidDescriptor, "instance-id empty");
    if (d.class_id.empty()) throw Error(Errc::InvalidDescriptor, "class-id empty");
    if (d.measured_latency_ms <= 0.0)
        throw Error(Errc::InvalidDescriptor, "latency-ms must be positive");
    if (d.measured_failure_rate < 0.0 || d.measured_failure_rate > 1.0)
        throw Error(Errc::InvalidDescriptor, "failure-rate outside [0,1]");
}

namespace {

bool order_acyclic(const ArchitectureDescription& d) {
    // DFS over the precedes relation
    std::map<VasKind, std::vector<VasKind>> adj;
    std::set<VasKind> nodes;
    for (const auto& [a, b] : d.order) {
        adj[a].push_back(b);
        nodes.insert(a);
        nodes.insert(b);
    }
    std::map<VasKind, int> mark;  // 0 unseen, 1 on stack, 2 done
    std::vector<std::pair<VasKind, size_t>> stack;
    for (auto n : nodes) {
        if (mark[n]) continue;
        stack.push_back({n, 0});
        mark[n] = 1;
        while (!stack.empty()) {
            auto& [v, i] = stack.back();
            if (i < adj[v].size()) {
                VasKind next = adj[v][i++];
                if (mark[next] == 1) return false;
                if (mark[next] == 0) {
                    mark[next] = 1;
                    stack.push_back({next, 0});
                }
            } else {
                mark[v] = 2;
                stack.pop_back();
            }
        }
    }
    return true;
}

}  // namespace

void validate_architecture(const ArchitectureDescription& d) {
    if (d.id.empty()) throw Error(Errc::InvalidDescriptor, "architecture id empty");
    if (!order_acyclic(d)) throw Error(Errc::InvalidDescriptor, "order relation is cyclic: " + d.id);
    for (const auto& [a, b] : d.exclusions) {
        if (d.mandatory.count(a) && d.mandatory.count(b))
            throw Error(Errc::InvalidDescriptor,
                        "exclusion pairs two mandatory kinds: " + to_string(a) + "," + to_string(b));
    }
    if (d.realizes && (d.mandatory.count(*d.realizes) || d.optional.count(*d.realizes)))
        throw Error(Errc::InvalidDescriptor, "realizes kind appears among its own components");
}

// ---------------------------------------------------------------------------
// Queries

std::vector<CapabilityDescriptor> find_capabilities(const Snapshot& snapshot, VasKind kind,
                                                    const ConstraintList& required) {
    std::vector<CapabilityDescriptor> out;
    for (const auto& [id, d] : snapshot->capabilities) {
        if (d.kind == kind && constraint_satisfies(d.offered, required)) out.push_back(d);
    }
    return out;  // map iteration is already instance-id ascending
}

std::vector<ArchitectureDescription> find_architectures(
    const Snapshot& snapshot, const std::optional<std::string>& category,
    const std::optional<VasKind>& realizes) {
    std::vector<ArchitectureDescription> out;
    for (const auto& [id, d] : snapshot->architectures) {
        if (category && d.category != *category) continue;
        if (realizes && d.realizes != *realizes) continue;
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.category, a.id) < std::tie(b.category, b.id);
    });
    return out;
}

std::optional<ClientRecord> find_client(const Snapshot& snapshot, const std::string& owner_id) {
    auto it = snapshot->clients.find(owner_id);
    if (it == snapshot->clients.end()) return std::nullopt;
    return it->second;
}

std::string dump_state(const RegistryState& state) {
    Doc d = Doc::object();
    Doc caps = Doc::object();
    for (const auto& [id, c] : state.capabilities) caps[id] = capability_to_doc(c);
    d["capabilities"] = caps;
    Doc archs = Doc::object();
    for (const auto& [id, a] : state.architectures) archs[id] = architecture_to_doc(a);
    d["architectures"] = archs;
    Doc clients = Doc::object();
    for (const auto& [id, r] : state.clients) clients[id] = client_record_to_doc(r);
    d["clients"] = clients;
    return d.dump(2);
}

// ---------------------------------------------------------------------------
// Store

std::string RegistryStore::publish_capability(const CapabilityDescriptor& descriptor) {
    validate_capability(descriptor);
    std::lock_guard lock(mutex_);
    if (state_->capabilities.count(descriptor.instance_id))
        throw Error(Errc::DuplicateInstance, descriptor.instance_id);
    append("publish-capability", capability_to_doc(descriptor));
    return descriptor.instance_id;
}

std::string RegistryStore::publish_architecture(const ArchitectureDescription& description) {
    validate_architecture(description);
    std::lock_guard lock(mutex_);
    if (state_->architectures.count(description.id))
        throw Error(Errc::DuplicateInstance, description.id);
    append("publish-architecture", architecture_to_doc(description));
    return description.id;
}

namespace {

Doc outcome_to_doc(const std::string& owner_id, const OutcomeEvent& event) {
    Doc d = Doc::object();
    d["owner-id"] = owner_id;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, UsageEvent>) {
                d["event"] = "usage";
                d["collaboration-id"] = e.collaboration_id;
            } else if constexpr (std::is_same_v<T, FailureEvent>) {
                d["event"] = "failure";
                d["instance-id"] = e.instance_id;
            } else if constexpr (std::is_same_v<T, DecisionEvent>) {
                d["event"] = "decision";
                d["ccm-id"] = e.ccm_id;
                d["accepted"] = e.accepted;
            } else if constexpr (std::is_same_v<T, CacheStageEvent>) {
                d["event"] = "cache-stage";
                d["stage-key"] = e.stage_key;
                d["model"] = e.model;
            } else {
                d["event"] = "request";
                d["request"] = profile_request_to_doc(e.request);
            }
        },
        event);
    return d;
}

void apply_outcome(ClientRecord& rec, const Doc& body) {
    const auto event = body.at("event").get<std::string>();
    if (event == "usage") {
        rec.usage_counts[body.at("collaboration-id").get<std::string>()]++;
    } else if (event == "failure") {
        rec.failure_counts[body.at("instance-id").get<std::string>()]++;
    } else if (event == "decision") {
        rec.decisions.emplace_back(body.at("ccm-id").get<std::string>(),
                                   body.at("accepted").get<bool>());
    } else if (event == "cache-stage") {
        rec.stage_cache[body.at("stage-key").get<std::string>()] = body.at("model");
    } else if (event == "request") {
        rec.history.push_back(validate_profile_request(body.at("request")));
    } else {
        throw Error(Errc::MalformedDocument, "outcome event: " + event);
    }
}

}  // namespace

ClientRecord RegistryStore::record_outcome(const std::string& owner_id, const OutcomeEvent& event) {
    std::lock_guard lock(mutex_);
    append("record-outcome", outcome_to_doc(owner_id, event));
    return state_->clients.at(owner_id);
}

Snapshot RegistryStore::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::vector<std::string> RegistryStore::journal_lines() const {
    std::lock_guard lock(mutex_);
    return journal_;
}

std::string RegistryStore::journal_text() const {
    std::ostringstream out;
    for (const auto& line : journal_lines()) out << line << '\n';
    return out.str();
}

void RegistryStore::append(const std::string& event_type, const Doc& body) {
    // caller holds mutex_
    ++seq_;
    Doc record = Doc::object();
    record["seq"] = seq_;
    record["timestamp"] = seq_;  // logical clock
    record["event-type"] = event_type;
    record["body"] = body;
    journal_.push_back(record.dump());
    apply(event_type, body);
    if (!journal_path_.empty()) {
        std::ofstream out(journal_path_, std::ios::app);
        out << journal_.back() << '\n';
    }
}

void RegistryStore::apply(const std::string& event_type, const Doc& body) {
    auto next = std::make_shared<RegistryState>(*state_);
    if (event_type == "publish-capability") {
        auto d = capability_from_doc(body);
        next->capabilities[d.instance_id] = std::move(d);
    } else if (event_type == "publish-architecture") {
        auto d = architecture_from_doc(body);
        next->architectures[d.id] = std::move(d);
    } else if (event_type == "record-outcome") {
        const auto owner = body.at("owner-id").get<std::string>();
        auto& rec = next->clients[owner];  // auto-created on first event
        rec.owner_id = owner;
        apply_outcome(rec, body);
    } else {
        throw Error(Errc::MalformedDocument, "journal event-type: " + event_type);
    }
    state_ = std::move(next);
}

Snapshot RegistryStore::replay(const std::vector<std::string>& journal) {
    RegistryStore store;
    for (const auto& line : journal) {
        if (line.empty()) continue;
        Doc record = Doc::parse(line);
        store.seq_ = record.at("seq").get<std::int64_t>();
        store.journal_.push_back(line);
        store.apply(record.at("event-type").get<std::string>(), record.at("body"));
    }
    return store.state_;
}

void RegistryStore::attach_journal_file(const std::string& path) {
    std::vector<std::string> existing;
    {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) existing.push_back(line);
    }
    std::lock_guard lock(mutex_);
    RegistryStore replayed;
    for (const auto& line : existing) {
        Doc record = Doc::parse(line);
        replayed.seq_ = record.at("seq").get<std::int64_t>();
        replayed.journal_.push_back(line);
        replayed.apply(record.at("event-type").get<std::string>(), record.at("body"));
    }
    state_ = replayed.state_;
    journal_ = std::move(replayed.journal_);
    seq_ = replayed.seq_;
    journal_path_ = path;
}

}  // namespace spgw
