#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "spgw/registry/registry.hpp"

using namespace spgw;
using fixtures::capability;

TEST_CASE("publish then find sees the descriptor after journal replay") {
    RegistryStore store;
    auto id = store.publish_capability(capability("tok-authn", "cls-a", VasKind::Authentication,
                                                  20.0, 0.0, {Constraint::max_latency_ms(20)}));
    CHECK(id == "tok-authn");

    auto found = find_capabilities(store.snapshot(), VasKind::Authentication, {});
    REQUIRE(found.size() == 1);
    CHECK(found[0].instance_id == "tok-authn");

    // read-after-write against journal replay
    auto replayed = RegistryStore::replay(store.journal_lines());
    auto replay_found = find_capabilities(replayed, VasKind::Authentication, {});
    REQUIRE(replay_found.size() == 1);
    CHECK(replay_found[0].instance_id == "tok-authn");
}

TEST_CASE("publish rejects duplicates and invalid descriptors") {
    RegistryStore store;
    store.publish_capability(capability("i1", "c", VasKind::Audit, 1.0, 0.0));
    CHECK_THROWS_AS(store.publish_capability(capability("i1", "c", VasKind::Audit, 1.0, 0.0)),
                    Error);

    auto bad = capability("i2", "c", VasKind::Audit, 1.0, 1.5);
    try {
        store.publish_capability(bad);
        FAIL("expected InvalidDescriptor");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidDescriptor);
    }
}

TEST_CASE("find_capabilities filters by kind and constraints deterministically") {
    RegistryStore store;
    store.publish_capability(capability("a-20", "c1", VasKind::Authentication, 20.0, 0.0,
                                        {Constraint::max_latency_ms(20)}));
    store.publish_capability(capability("b-40", "c2", VasKind::Authentication, 40.0, 0.0,
                                        {Constraint::max_latency_ms(40)}));
    store.publish_capability(capability("c-80", "c3", VasKind::Authentication, 80.0, 0.0,
                                        {Constraint::max_latency_ms(80)}));

    auto snap = store.snapshot();
    auto within50 = find_capabilities(snap, VasKind::Authentication,
                                      {Constraint::max_latency_ms(50)});
    REQUIRE(within50.size() == 2);
    CHECK(within50[0].instance_id == "a-20");
    CHECK(within50[1].instance_id == "b-40");

    CHECK(find_capabilities(snap, VasKind::Billing, {}).empty());
    CHECK(find_capabilities(snap, VasKind::Authentication, {}).size() == 3);
}

TEST_CASE("find_capabilities equals brute-force filtering for random inputs") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> bound(1, 100);
    RegistryStore store;
    for (int i = 0; i < 30; ++i) {
        auto kind = all_vas_kinds()[rng() % all_vas_kinds().size()];
        char id[16];
        std::snprintf(id, sizeof id, "cap-%02d", i);
        store.publish_capability(capability(id, "cls-" + std::to_string(i % 5), kind, 1.0, 0.0,
                                            {Constraint::max_latency_ms(bound(rng))}));
    }
    auto snap = store.snapshot();
    for (int trial = 0; trial < 200; ++trial) {
        auto kind = all_vas_kinds()[rng() % all_vas_kinds().size()];
        ConstraintList required;
        if (rng() % 2) required.push_back(Constraint::max_latency_ms(bound(rng)));
        auto got = find_capabilities(snap, kind, required);
        auto expected = oracles::find_capabilities_oracle(snap, kind, required);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i].instance_id == expected[i].instance_id);
    }
}

TEST_CASE("find_architectures filters by category and realizes") {
    RegistryStore store;
    fixtures::seed_music_store(store);
    auto snap = store.snapshot();

    auto auth = find_architectures(snap, std::string("Authentication"), std::nullopt);
    REQUIRE(auth.size() == 1);
    CHECK(auth[0].id == "Federated-Authentication");

    auto realizing = find_architectures(snap, std::nullopt, VasKind::Authentication);
    REQUIRE(realizing.size() == 1);
    CHECK(realizing[0].mandatory ==
          std::set<VasKind>{VasKind::TokenIssuance, VasKind::TokenValidation});

    CHECK(find_architectures(snap, std::string("NoSuch"), std::nullopt).empty());
}

TEST_CASE("record_outcome keeps client records consistent") {
    RegistryStore store;
    store.record_outcome("owner", DecisionEvent{"ccm-1", true});
    auto rec = store.record_outcome("owner", DecisionEvent{"ccm-2", false});
    CHECK(rec.acceptance_degree() == doctest::Approx(0.5));

    for (int i = 0; i < 3; ++i) store.record_outcome("owner", FailureEvent{"inst-7"});
    auto snap = store.snapshot();
    CHECK(find_client(snap, "owner")->failure_counts.at("inst-7") == 3);

    // stage cache round-trips through journal replay
    Doc model = Doc{{"adm-ref", "X"}, {"slots", Doc::array()}};
    store.record_outcome("owner", CacheStageEvent{"k1/agcm", model});
    auto replayed = RegistryStore::replay(store.journal_lines());
    CHECK(replayed->clients.at("owner").stage_cache.at("k1/agcm") == model);
}

TEST_CASE("clients with no proposals have acceptance degree 1") {
    ClientRecord fresh;
    CHECK(fresh.acceptance_degree() == doctest::Approx(1.0));
}

TEST_CASE("snapshot isolation") {
    RegistryStore store;
    auto snap = store.snapshot();
    store.publish_capability(capability("late", "c", VasKind::Audit, 1.0, 0.0));
    CHECK(find_capabilities(snap, VasKind::Audit, {}).empty());
    CHECK(find_capabilities(store.snapshot(), VasKind::Audit, {}).size() == 1);

    auto s1 = store.snapshot();
    auto s2 = store.snapshot();
    CHECK(dump_state(*s1) == dump_state(*s2));
}

TEST_CASE("journal replay reproduces live state byte-identically") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> bound(1, 100);
    RegistryStore store;
    fixtures::seed_music_store(store);
    for (int i = 0; i < 300; ++i) {
        switch (rng() % 4) {
            case 0:
                store.publish_capability(capability("r-" + std::to_string(i), "cls-r",
                                                    all_vas_kinds()[rng() % 9], bound(rng) * 1.0,
                                                    (rng() % 100) / 100.0));
                break;
            case 1:
                store.record_outcome("owner-" + std::to_string(rng() % 3),
                                     UsageEvent{"collab-" + std::to_string(rng() % 5)});
                break;
            case 2:
                store.record_outcome("owner-" + std::to_string(rng() % 3),
                                     FailureEvent{"inst-" + std::to_string(rng() % 5)});
                break;
            case 3:
                store.record_outcome("owner-" + std::to_string(rng() % 3),
                                     DecisionEvent{"ccm-" + std::to_string(i), rng() % 2 == 0});
                break;
        }
    }
    auto replayed = RegistryStore::replay(store.journal_lines());
    CHECK(dump_state(*replayed) == dump_state(*store.snapshot()));
}

TEST_CASE("journal survives a file round-trip") {
    const std::string path = "test_registry_journal.jsonl";
    std::remove(path.c_str());
    {
        RegistryStore store;
        store.attach_journal_file(path);
        store.publish_capability(capability("persisted", "c", VasKind::Billing, 2.0, 0.0));
        store.record_outcome("owner", UsageEvent{"collab-1"});
    }
    RegistryStore reloaded;
    reloaded.attach_journal_file(path);
    auto snap = reloaded.snapshot();
    CHECK(snap->capabilities.count("persisted") == 1);
    CHECK(snap->clients.at("owner").usage_counts.at("collab-1") == 1);
    std::remove(path.c_str());
}
