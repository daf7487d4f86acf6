#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "spgw/core/model.hpp"

using namespace spgw;

TEST_CASE("profile request parsing fills defaults") {
    Doc doc = Doc::object();
    doc["owner-id"] = "content-a";
    doc["resource-id"] = "catalogue";
    doc["wanted"] = Doc::array({"authentication", "authorisation"});
    doc["direction"] = "request";
    doc["adaptability"] = "open";

    auto req = validate_profile_request(doc);
    REQUIRE(req.wanted.size() == 2);
    CHECK(req.wanted[0].kind == VasKind::Authentication);
    CHECK(req.wanted[1].kind == VasKind::Authorisation);
    CHECK(req.direction == Placement::Request);
    CHECK(req.adaptability == AdaptabilityLevel::Open);

    SUBCASE("defaults when direction/adaptability absent") {
        doc.erase("direction");
        doc.erase("adaptability");
        auto defaulted = validate_profile_request(doc);
        CHECK(defaulted.direction == Placement::Both);
        CHECK(defaulted.adaptability == AdaptabilityLevel::Guarded);
    }
}

TEST_CASE("profile request rejections") {
    Doc doc = Doc::object();
    doc["owner-id"] = "o";
    doc["resource-id"] = "r";

    SUBCASE("empty wanted list") {
        doc["wanted"] = Doc::array();
        CHECK_THROWS_WITH_AS(validate_profile_request(doc), doctest::Contains("EmptyRequest"),
                             Error);
    }
    SUBCASE("unknown kind outside the closed vocabulary") {
        doc["wanted"] = Doc::array({"firewall"});
        try {
            validate_profile_request(doc);
            FAIL("expected UnknownKind");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::UnknownKind);
            CHECK(std::string(e.what()).find("firewall") != std::string::npos);
        }
    }
    SUBCASE("duplicate kind") {
        doc["wanted"] = Doc::array({"audit", "audit"});
        try {
            validate_profile_request(doc);
            FAIL("expected DuplicateKind");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DuplicateKind);
        }
    }
    SUBCASE("constraint placement inconsistent with direction") {
        doc["wanted"] = Doc::array({Doc{{"kind", "audit"},
                                        {"constraints", Doc::array({Doc{{"placement", "response"}}})}}});
        doc["direction"] = "request";
        try {
            validate_profile_request(doc);
            FAIL("expected MalformedConstraint");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MalformedConstraint);
        }
    }
    SUBCASE("malformed numeric constraint") {
        doc["wanted"] = Doc::array(
            {Doc{{"kind", "audit"},
                 {"constraints", Doc::array({Doc{{"qos-max-latency-ms", -5}}})}}});
        try {
            validate_profile_request(doc);
            FAIL("expected MalformedConstraint");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MalformedConstraint);
        }
    }
}

TEST_CASE("profile request round-trips through its document form") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> kind_count(1, 5);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> bound(1, 500);

    for (int trial = 0; trial < 200; ++trial) {
        ProfileRequest req;
        req.owner_id = "owner-" + std::to_string(trial);
        req.resource_id = "res";
        auto kinds = all_vas_kinds();
        std::shuffle(kinds.begin(), kinds.end(), rng);
        kinds.resize(kind_count(rng));
        for (auto k : kinds) {
            WantedEntry w{k, {}};
            if (coin(rng)) w.constraints.push_back(Constraint::max_latency_ms(bound(rng)));
            if (coin(rng)) w.constraints.push_back(Constraint::semantics("XACML"));
            req.wanted.push_back(w);
        }
        req.direction = Placement::Both;
        req.adaptability = coin(rng) ? AdaptabilityLevel::Open : AdaptabilityLevel::Locked;

        auto reparsed = validate_profile_request(profile_request_to_doc(req));
        CHECK(reparsed == req);
    }
}

TEST_CASE("constraint satisfaction basics") {
    // interval inclusion: offered latency bound 20 within required bound 50
    CHECK(constraint_satisfies({Constraint::max_latency_ms(20)}, {Constraint::max_latency_ms(50)}));
    CHECK_FALSE(
        constraint_satisfies({Constraint::max_latency_ms(80)}, {Constraint::max_latency_ms(50)}));
    // disjoint semantics tags never satisfy
    CHECK_FALSE(constraint_satisfies({Constraint::semantics("XACML")},
                                     {Constraint::semantics("SecPAL")}));
    CHECK(constraint_satisfies({Constraint::semantics("XACML"), Constraint::semantics("SecPAL")},
                               {Constraint::semantics("SecPAL")}));
    // empty requirement is vacuously satisfied
    CHECK(constraint_satisfies({}, {}));
    CHECK(constraint_satisfies({Constraint::min_throughput_rps(5)}, {}));
    // throughput floors
    CHECK(constraint_satisfies({Constraint::min_throughput_rps(100)},
                               {Constraint::min_throughput_rps(50)}));
    CHECK_FALSE(constraint_satisfies({Constraint::min_throughput_rps(10)},
                                     {Constraint::min_throughput_rps(50)}));
    // placement coverage
    CHECK(constraint_satisfies({Constraint::of_placement(Placement::Both)},
                               {Constraint::of_placement(Placement::Request)}));
    CHECK_FALSE(constraint_satisfies({Constraint::of_placement(Placement::Response)},
                                     {Constraint::of_placement(Placement::Request)}));
    // a required kind the offer does not mention fails
    CHECK_FALSE(constraint_satisfies({}, {Constraint::max_latency_ms(50)}));
}

TEST_CASE("latency satisfaction agrees with the interval-inclusion oracle") {
    for (std::int64_t offered = 1; offered <= 100; ++offered) {
        for (std::int64_t required = 1; required <= 100; ++required) {
            const bool got = constraint_satisfies({Constraint::max_latency_ms(offered)},
                                                  {Constraint::max_latency_ms(required)});
            CHECK(got == oracles::latency_satisfies_oracle(offered, required));
        }
    }
}

TEST_CASE("constraint satisfaction is monotone under loosened requirements") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> bound(1, 200);
    std::uniform_int_distribution<int> coin(0, 1);
    const std::vector<std::string> tags{"XACML", "SecPAL", "Rego"};

    for (int trial = 0; trial < 500; ++trial) {
        ConstraintList offered, required;
        if (coin(rng)) offered.push_back(Constraint::max_latency_ms(bound(rng)));
        if (coin(rng)) offered.push_back(Constraint::min_throughput_rps(bound(rng)));
        offered.push_back(Constraint::semantics(tags[rng() % tags.size()]));
        required.push_back(Constraint::max_latency_ms(bound(rng)));
        required.push_back(Constraint::min_throughput_rps(bound(rng)));
        if (coin(rng)) required.push_back(Constraint::semantics(tags[rng() % tags.size()]));

        // loosen: raise latency caps, lower throughput floors, add a tag option
        ConstraintList loosened;
        for (auto c : required) {
            if (c.kind == ConstraintKind::QosMaxLatencyMs) c.bound += bound(rng);
            if (c.kind == ConstraintKind::QosMinThroughputRps)
                c.bound = std::max<std::int64_t>(1, c.bound - bound(rng));
            loosened.push_back(c);
        }
        if (constraint_satisfies(offered, required)) CHECK(constraint_satisfies(offered, loosened));
    }
}

TEST_CASE("envelope documents round-trip") {
    MessageEnvelope e;
    e.collaboration_id = "vo-jazz:content-a";
    e.direction = Direction::Request;
    e.headers = {{"token", "tok-1"}, {"sender-role", "buyer"}};
    e.payload = R"({"track":"so-what"})";
    CHECK(envelope_from_doc(envelope_to_doc(e)) == e);

    CHECK(collaboration_id_well_formed("vo-jazz:content-a"));
    CHECK_FALSE(collaboration_id_well_formed(""));
    CHECK_FALSE(collaboration_id_well_formed("bad id"));
}

TEST_CASE("leaf slot expansion is depth-first in slot order") {
    Ascm nested;
    nested.agcm.adm_ref = "Federated-Authentication";
    nested.agcm.slots = {{"token-issuance", VasKind::TokenIssuance, {}, SlotOrigin::SystemAdded},
                         {"token-validation", VasKind::TokenValidation, {}, SlotOrigin::SystemAdded}};
    nested.bindings["token-issuance"] = {"cls-sts-issue", nullptr};
    nested.bindings["token-validation"] = {"cls-sts-check", nullptr};

    Ascm top;
    top.agcm.adm_ref = "Baseline-Security";
    top.agcm.slots = {{"authentication", VasKind::Authentication, {}, SlotOrigin::ClientRequested},
                      {"authorisation", VasKind::Authorisation, {}, SlotOrigin::ClientRequested}};
    top.bindings["authentication"] = {"", std::make_shared<Ascm>(nested)};
    top.bindings["authorisation"] = {"cls-rbac-authz", nullptr};

    auto leaves = leaf_slots(top);
    REQUIRE(leaves.size() == 3);
    CHECK(leaves[0].path == "authentication/token-issuance");
    CHECK(leaves[1].path == "authentication/token-validation");
    CHECK(leaves[2].path == "authorisation");

    auto reparsed = ascm_from_doc(ascm_to_doc(top));
    CHECK(ascm_equal(reparsed, top));
}
