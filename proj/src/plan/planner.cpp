#include "spgw/plan/planner.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace spgw::plan {

Deviation Deviation::added(VasKind k) {
    Deviation d;
    d.kind = Kind::Added;
    d.added_kind = k;
    return d;
}

Deviation Deviation::substituted(std::string requested, std::string chosen) {
    Deviation d;
    d.kind = Kind::Substituted;
    d.requested_class = std::move(requested);
    d.chosen_class = std::move(chosen);
    return d;
}

Doc deviation_to_doc(const Deviation& d) {
    Doc doc = Doc::object();
    switch (d.kind) {
        case Deviation::Kind::Added:
            doc["kind"] = "added";
            doc["added"] = to_string(d.added_kind);
            break;
        case Deviation::Kind::Substituted:
            doc["kind"] = "substituted";
            doc["requested-class"] = d.requested_class;
            doc["chosen-class"] = d.chosen_class;
            break;
        case Deviation::Kind::ConstraintRelaxed:
            doc["kind"] = "constraint-relaxed";
            doc["slot-id"] = d.slot_id;
            doc["constraint"] = constraint_to_doc(d.relaxed);
            break;
    }
    return doc;
}

Doc plan_outcome_to_doc(const PlanOutcome& o) {
    Doc d = Doc::object();
    switch (o.status) {
        case PlanOutcome::Status::Ready: d["status"] = "ready"; break;
        case PlanOutcome::Status::ProposalPending: d["status"] = "proposal-pending"; break;
        case PlanOutcome::Status::Failed: d["status"] = "failed"; break;
    }
    if (o.ccm) d["ccm"] = ccm_to_doc(*o.ccm);
    Doc devs = Doc::array();
    for (const auto& dev : o.deviations) devs.push_back(deviation_to_doc(dev));
    d["deviations"] = devs;
    if (o.error) d["error"] = Doc{{"code", errc_name(o.error->code)}, {"detail", o.error->detail}};
    return d;
}

// ---------------------------------------------------------------------------
// Architecture selection

namespace {

std::set<VasKind> requested_kinds(const ProfileRequest& request) {
    std::set<VasKind> kinds;
    for (const auto& w : request.wanted) kinds.insert(w.kind);
    return kinds;
}

bool exclusions_conflict(const ArchitectureDescription& adm, const std::set<VasKind>& kinds) {
    // conflict when both ends of an exclusion pair would end up in the profile
    std::set<VasKind> combined = kinds;
    combined.insert(adm.mandatory.begin(), adm.mandatory.end());
    for (const auto& [a, b] : adm.exclusions)
        if (combined.count(a) && combined.count(b)) return true;
    return false;
}

}  // namespace

ArchitectureDescription select_adm(const ProfileRequest& request, const Snapshot& snapshot) {
    if (request.preferred_architecture) {
        const auto& [category, name] = *request.preferred_architecture;
        for (const auto& [id, adm] : snapshot->architectures)
            if (adm.category == category && adm.id == name) return adm;
        throw Error(Errc::NoAdmMatch, "preferred architecture not found: " + category + "/" + name);
    }

    const auto kinds = requested_kinds(request);
    std::optional<ArchitectureDescription> best;
    std::size_t best_score = 0;
    for (const auto& adm : find_architectures(snapshot, std::nullopt, std::nullopt)) {
        if (exclusions_conflict(adm, kinds)) continue;
        std::size_t score = 0;
        for (auto k : kinds)
            if (adm.mandatory.count(k) || adm.optional.count(k)) ++score;
        // find_architectures is (category, id) ascending, so the first wins ties
        if (!best || score > best_score) {
            best = adm;
            best_score = score;
        }
    }
    if (!best) throw Error(Errc::NoAdmMatch, "no architecture compatible with request");
    return *best;
}

// ---------------------------------------------------------------------------
// AGCM construction

namespace {

/// Lexicographically-smallest linear extension: kinds touched by the order
/// relation first (greedy min-name topological sort), the rest sorted by name.
std::vector<VasKind> canonical_order(const std::set<VasKind>& kinds,
                                     const std::vector<std::pair<VasKind, VasKind>>& order) {
    std::set<VasKind> in_relation;
    for (const auto& [a, b] : order) {
        in_relation.insert(a);
        in_relation.insert(b);
    }

    std::vector<VasKind> ordered, free_kinds;
    for (auto k : kinds) (in_relation.count(k) ? ordered : free_kinds).push_back(k);

    auto by_name = [](VasKind a, VasKind b) { return to_string(a) < to_string(b); };

    std::map<VasKind, int> indegree;
    std::map<VasKind, std::vector<VasKind>> succ;
    for (auto k : ordered) indegree[k] = 0;
    for (const auto& [a, b] : order) {
        if (indegree.count(a) && indegree.count(b)) {
            succ[a].push_back(b);
            indegree[b]++;
        }
    }

    std::vector<VasKind> result;
    std::set<VasKind> placed;
    while (result.size() < ordered.size()) {
        VasKind pick{};
        bool found = false;
        std::vector<VasKind> ready;
        for (auto k : ordered)
            if (!placed.count(k) && indegree[k] == 0) ready.push_back(k);
        for (auto k : ready) {
            if (!found || by_name(k, pick)) {
                pick = k;
                found = true;
            }
        }
        if (!found) throw Error(Errc::CyclicArchitecture, "order relation cycles");
        placed.insert(pick);
        result.push_back(pick);
        for (auto s : succ[pick]) indegree[s]--;
    }

    std::sort(free_kinds.begin(), free_kinds.end(), by_name);
    result.insert(result.end(), free_kinds.begin(), free_kinds.end());
    return result;
}

std::string kinds_to_list(const std::vector<VasKind>& kinds) {
    std::ostringstream out;
    for (std::size_t i = 0; i < kinds.size(); ++i) out << (i ? "," : "") << to_string(kinds[i]);
    return out.str();
}

}  // namespace

AgcmResult build_agcm(const ProfileRequest& request, const ArchitectureDescription& adm) {
    const bool nominal =
        request.preferred_architecture && request.preferred_architecture->second == adm.id;

    const auto requested = requested_kinds(request);
    if (nominal) {
        for (auto k : requested)
            if (!adm.mandatory.count(k) && !adm.optional.count(k))
                throw Error(Errc::KindNotAllowed, to_string(k) + " outside " + adm.id);
    }

    std::set<VasKind> kinds = requested;
    std::vector<VasKind> missing;
    for (auto k : adm.mandatory)
        if (!kinds.count(k)) missing.push_back(k);
    std::sort(missing.begin(), missing.end(),
              [](VasKind a, VasKind b) { return to_string(a) < to_string(b); });

    AgcmResult result;
    if (!missing.empty()) {
        if (request.adaptability == AdaptabilityLevel::Locked)
            throw Error(Errc::IncompleteProfile, kinds_to_list(missing));
        for (auto k : missing) {
            kinds.insert(k);
            if (request.adaptability == AdaptabilityLevel::Guarded)
                result.deviations.push_back(Deviation::added(k));
        }
    }

    for (const auto& [a, b] : adm.exclusions)
        if (kinds.count(a) && kinds.count(b))
            throw Error(Errc::ExclusionViolated, to_string(a) + "," + to_string(b));

    std::map<VasKind, ConstraintList> constraints;
    for (const auto& w : request.wanted) constraints[w.kind] = w.constraints;

    result.agcm.adm_ref = adm.id;
    for (auto k : canonical_order(kinds, adm.order)) {
        AgcmSlot slot;
        slot.slot_id = to_string(k);
        slot.kind = k;
        slot.constraints = constraints.count(k) ? constraints[k] : ConstraintList{};
        slot.origin = requested.count(k) ? SlotOrigin::ClientRequested : SlotOrigin::SystemAdded;
        result.agcm.slots.push_back(std::move(slot));
    }
    return result;
}

// ---------------------------------------------------------------------------
// ASCM binding

namespace {

struct ClassCandidate {
    std::string class_id;
    std::vector<CapabilityDescriptor> instances;
};

/// Capability classes of the given kind whose every instance satisfies the
/// required constraints, class-id ascending.
std::vector<ClassCandidate> qualifying_classes(const Snapshot& snapshot, VasKind kind,
                                               const ConstraintList& required) {
    std::map<std::string, std::vector<CapabilityDescriptor>> by_class;
    for (const auto& [id, d] : snapshot->capabilities)
        if (d.kind == kind) by_class[d.class_id].push_back(d);

    std::vector<ClassCandidate> out;
    for (auto& [class_id, instances] : by_class) {
        bool all_ok = true;
        for (const auto& inst : instances)
            if (!constraint_satisfies(inst.offered, required)) all_ok = false;
        if (all_ok && !instances.empty()) out.push_back({class_id, std::move(instances)});
    }
    return out;
}

struct BindContext {
    const Snapshot& snapshot;
    std::vector<Deviation>& deviations;
};

Ascm bind_recursive(const Agcm& agcm, BindContext& ctx, int depth_left,
                    std::vector<std::string>& path) {
    Ascm ascm;
    ascm.agcm = agcm;
    for (const auto& slot : agcm.slots) {
        auto classes = qualifying_classes(ctx.snapshot, slot.kind, slot.constraints);
        if (!classes.empty()) {
            AscmBinding b;
            b.capability_class = classes.front().class_id;  // class-id ascending
            ascm.bindings[slot.slot_id] = std::move(b);
            continue;
        }

        // fall back to an architecture that realizes this kind
        auto realizers = find_architectures(ctx.snapshot, std::nullopt, slot.kind);
        if (realizers.empty())
            throw Error(Errc::UnsatisfiableSlot, slot.slot_id + " (" + to_string(slot.kind) + ")");
        bool bound = false;
        std::string last_error;
        bool saw_cycle = false, saw_depth = false;
        for (const auto& arch : realizers) {
            if (std::find(path.begin(), path.end(), arch.id) != path.end()) {
                saw_cycle = true;
                continue;
            }
            if (depth_left <= 1) {
                saw_depth = true;
                continue;
            }
            // nested AGCM: the realizing architecture's mandatory kinds, in
            // canonical order, inheriting the parent slot's constraints
            Agcm nested;
            nested.adm_ref = arch.id;
            for (auto k : canonical_order(arch.mandatory, arch.order)) {
                AgcmSlot sub;
                sub.slot_id = to_string(k);
                sub.kind = k;
                sub.constraints = slot.constraints;
                sub.origin = SlotOrigin::SystemAdded;
                nested.slots.push_back(std::move(sub));
            }
            path.push_back(arch.id);
            try {
                auto sub = bind_recursive(nested, ctx, depth_left - 1, path);
                path.pop_back();
                AscmBinding b;
                b.nested = std::make_shared<Ascm>(std::move(sub));
                ascm.bindings[slot.slot_id] = std::move(b);
                ctx.deviations.push_back(Deviation::substituted(
                    to_string(slot.kind), "architecture:" + arch.id));
                bound = true;
                break;
            } catch (const Error& e) {
                path.pop_back();
                last_error = e.what();
            }
        }
        if (!bound) {
            if (saw_depth && !saw_cycle) throw Error(Errc::DepthExceeded, slot.slot_id);
            if (saw_cycle && last_error.empty() && !saw_depth) {
                std::ostringstream p;
                for (const auto& id : path) p << id << "/";
                p << "...";
                throw Error(Errc::CyclicArchitecture, p.str());
            }
            throw Error(Errc::UnsatisfiableSlot,
                        slot.slot_id + " (" + to_string(slot.kind) + ")" +
                            (last_error.empty() ? "" : ": " + last_error));
        }
    }
    return ascm;
}

}  // namespace

AscmResult bind_ascm(const Agcm& agcm, const Snapshot& snapshot, int depth_limit) {
    if (depth_limit < 1) throw Error(Errc::DepthExceeded, "depth-limit must be >= 1");
    AscmResult result;
    BindContext ctx{snapshot, result.deviations};
    std::vector<std::string> path{agcm.adm_ref};
    result.ascm = bind_recursive(agcm, ctx, depth_limit, path);
    return result;
}

// ---------------------------------------------------------------------------
// CCM binding

double instance_cost(const CapabilityDescriptor& d, const ClientRecord& client,
                     const PlannerConfig& config) {
    double history = 0.0;
    auto it = client.failure_counts.find(d.instance_id);
    if (it != client.failure_counts.end())
        history = std::min(1.0, static_cast<double>(it->second) / 10.0);
    return d.measured_latency_ms * config.latency_weight +
           d.measured_failure_rate * config.failure_weight + history * config.history_weight;
}

Ccm bind_ccm(const Ascm& ascm, const Snapshot& snapshot, const ClientRecord& client,
             const PlannerConfig& config) {
    Ccm ccm;
    ccm.ascm = ascm;
    double total = 0.0;
    for (const auto& leaf : leaf_slots(ascm)) {
        const CapabilityDescriptor* chosen = nullptr;
        double chosen_cost = 0.0;
        for (const auto& [id, d] : snapshot->capabilities) {  // instance-id ascending
            if (d.kind != leaf.kind || d.class_id != leaf.capability_class) continue;
            if (!constraint_satisfies(d.offered, leaf.constraints)) continue;
            const double cost = instance_cost(d, client, config);
            if (!chosen || cost < chosen_cost) {
                chosen = &d;
                chosen_cost = cost;
            }
        }
        if (!chosen) throw Error(Errc::UnsatisfiableSlot, leaf.path);
        ccm.instance_bindings[leaf.path] = {chosen->instance_id, chosen->endpoint};
        for (const auto& step : chosen->setup_steps)
            ccm.setup_plan.push_back({leaf.path, chosen->instance_id, step});
        total += chosen_cost;
    }
    ccm.score = total;
    return ccm;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace {

std::string request_stage_key(const ProfileRequest& request, const char* stage) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(profile_request_to_doc(request).dump())));
    return std::string(buf) + "/" + stage;
}

PlanOutcome failed(const ProfileRequest& request, Errc code, std::string detail) {
    PlanOutcome o;
    o.status = PlanOutcome::Status::Failed;
    o.error = PlanError{code, std::move(detail)};
    o.request = request;
    return o;
}

}  // namespace

PlanOutcome plan_profile(const ProfileRequest& request, const Snapshot& snapshot, RegistryStore& store,
                 const PlannerConfig& config) {
    store.record_outcome(request.owner_id, RequestEvent{request});
    ClientRecord client;
    if (auto existing = find_client(snapshot, request.owner_id)) client = *existing;

    std::vector<Deviation> deviations;
    Ccm ccm;
    try {
        const auto adm = select_adm(request, snapshot);
        auto agcm = build_agcm(request, adm);
        deviations = agcm.deviations;
        store.record_outcome(request.owner_id,
                             CacheStageEvent{request_stage_key(request, "agcm"),
                                             agcm_to_doc(agcm.agcm)});
        auto ascm = bind_ascm(agcm.agcm, snapshot, config.depth_limit);
        deviations.insert(deviations.end(), ascm.deviations.begin(), ascm.deviations.end());
        store.record_outcome(request.owner_id,
                             CacheStageEvent{request_stage_key(request, "ascm"),
                                             ascm_to_doc(ascm.ascm)});
        ccm = bind_ccm(ascm.ascm, snapshot, client, config);
        store.record_outcome(request.owner_id,
                             CacheStageEvent{request_stage_key(request, "ccm"), ccm_to_doc(ccm)});
    } catch (const Error& e) {
        return failed(request, e.code(), e.what());
    }

    PlanOutcome outcome;
    outcome.request = request;
    outcome.ccm = std::move(ccm);
    switch (request.adaptability) {
        case AdaptabilityLevel::Open:
            // Open permits silent substitution/addition: nothing to report
            outcome.status = PlanOutcome::Status::Ready;
            break;
        case AdaptabilityLevel::Guarded:
            outcome.deviations = std::move(deviations);
            outcome.status = outcome.deviations.empty() ? PlanOutcome::Status::Ready
                                                        : PlanOutcome::Status::ProposalPending;
            break;
        case AdaptabilityLevel::Locked:
            outcome.deviations = std::move(deviations);
            if (outcome.deviations.empty()) {
                outcome.status = PlanOutcome::Status::Ready;
            } else {
                Doc devs = Doc::array();
                for (const auto& d : outcome.deviations) devs.push_back(deviation_to_doc(d));
                outcome.status = PlanOutcome::Status::Failed;
                outcome.error = PlanError{Errc::ApprovalRequired, devs.dump()};
                outcome.ccm.reset();
            }
            break;
    }
    return outcome;
}

PlanOutcome review_ccm(const PlanOutcome& outcome, const ReviewDecision& decision,
                       RegistryStore& store, const PlannerConfig& config) {
    if (outcome.status != PlanOutcome::Status::ProposalPending)
        throw Error(Errc::ProtocolViolation, "review requires a pending proposal");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(ccm_content_hash(*outcome.ccm)));
    const std::string ccm_id = buf;

    store.record_outcome(outcome.request.owner_id, DecisionEvent{ccm_id, decision.accept});
    if (decision.accept) {
        PlanOutcome accepted = outcome;
        accepted.status = PlanOutcome::Status::Ready;
        return accepted;
    }
    if (decision.new_request) return plan_profile(*decision.new_request, store.snapshot(), store, config);
    return failed(outcome.request, Errc::RejectedByClient, "proposal rejected without replacement");
}

// ---------------------------------------------------------------------------
// Invariant checkers

void check_agcm(const Agcm& agcm, const ArchitectureDescription& adm) {
    std::set<std::string> ids;
    std::map<VasKind, std::size_t> position;
    for (std::size_t i = 0; i < agcm.slots.size(); ++i) {
        const auto& s = agcm.slots[i];
        if (!ids.insert(s.slot_id).second)
            throw Error(Errc::MalformedDocument, "duplicate slot-id " + s.slot_id);
        position[s.kind] = i;
    }
    for (auto k : adm.mandatory)
        if (!position.count(k))
            throw Error(Errc::IncompleteProfile, "mandatory kind missing: " + to_string(k));
    for (const auto& [a, b] : adm.order) {
        if (position.count(a) && position.count(b) && position[a] >= position[b])
            throw Error(Errc::MalformedDocument,
                        "slot order violates " + to_string(a) + " before " + to_string(b));
    }
}

namespace {

void check_ascm_rec(const Ascm& ascm, int depth_left, std::vector<std::string>& path) {
    if (depth_left < 0) throw Error(Errc::DepthExceeded, "nesting exceeds limit");
    if (std::find(path.begin(), path.end(), ascm.agcm.adm_ref) != path.end())
        throw Error(Errc::CyclicArchitecture, ascm.agcm.adm_ref);
    path.push_back(ascm.agcm.adm_ref);
    std::set<std::string> slot_ids;
    for (const auto& s : ascm.agcm.slots) slot_ids.insert(s.slot_id);
    if (slot_ids.size() != ascm.bindings.size())
        throw Error(Errc::MalformedDocument, "binding count differs from slot count");
    for (const auto& [slot_id, b] : ascm.bindings) {
        if (!slot_ids.count(slot_id))
            throw Error(Errc::MalformedDocument, "binding for unknown slot " + slot_id);
        if (b.is_nested()) check_ascm_rec(*b.nested, depth_left - 1, path);
    }
    path.pop_back();
}

}  // namespace

void check_ascm(const Ascm& ascm, int depth_limit) {
    std::vector<std::string> path;
    check_ascm_rec(ascm, depth_limit, path);
}

void check_ccm(const Ccm& ccm, const Snapshot& snapshot) {
    std::size_t plan_cursor = 0;
    for (const auto& leaf : leaf_slots(ccm.ascm)) {
        auto it = ccm.instance_bindings.find(leaf.path);
        if (it == ccm.instance_bindings.end())
            throw Error(Errc::UnsatisfiableSlot, "leaf unbound: " + leaf.path);
        auto cap = snapshot->capabilities.find(it->second.instance_id);
        if (cap == snapshot->capabilities.end())
            throw Error(Errc::InvalidDescriptor, "bound instance unknown: " + it->second.instance_id);
        if (!constraint_satisfies(cap->second.offered, leaf.constraints))
            throw Error(Errc::MalformedDocument,
                        "bound instance violates slot constraints: " + leaf.path);
        for (const auto& step : cap->second.setup_steps) {
            if (plan_cursor >= ccm.setup_plan.size() ||
                ccm.setup_plan[plan_cursor].slot_path != leaf.path ||
                !(ccm.setup_plan[plan_cursor].step == step))
                throw Error(Errc::MalformedDocument, "setup plan out of order at " + leaf.path);
            ++plan_cursor;
        }
    }
    if (plan_cursor != ccm.setup_plan.size())
        throw Error(Errc::MalformedDocument, "setup plan has extra steps");
    if (ccm.score < 0) throw Error(Errc::MalformedDocument, "negative score");
}

}  // namespace spgw::plan
