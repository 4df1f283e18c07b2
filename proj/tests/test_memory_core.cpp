#include "memloop/memory_core.hpp"

#include "doctest.h"
#include "helpers.hpp"

using namespace memloop;
using namespace memloop::testing;

TEST_CASE("create assigns ids from zero and fills both step stamps") {
    MemoryState state;
    state.step = 3;
    OpResult r = create_entry(state, "fact A");
    REQUIRE(r.ok());
    CHECK(r.id == 0);
    CHECK(state.entries.size() == 1);
    CHECK(state.next_id == 1);
    CHECK(state.entries.at(0).content == "fact A");
    CHECK(state.entries.at(0).created_step == 3);
    CHECK(state.entries.at(0).updated_step == 3);
    CHECK(!state.entries.at(0).embedding.has_value());
}

TEST_CASE("duplicate content gets distinct ids") {
    MemoryState state;
    CHECK(create_entry(state, "same").id == 0);
    CHECK(create_entry(state, "same").id == 1);
    CHECK(state.entries.size() == 2);
}

TEST_CASE("create rejects blank content") {
    MemoryState state;
    CHECK(create_entry(state, "").status == OpStatus::empty_content);
    CHECK(create_entry(state, "  \t\n").status == OpStatus::empty_content);
    CHECK(state.entries.empty());
    CHECK(state.next_id == 0);
}

TEST_CASE("update replaces content and invalidates the embedding") {
    MemoryState state;
    create_entry(state, "original");
    state.entries.at(0).embedding = std::vector<float>{1.0f};
    state.step = 5;
    OpResult r = update_entry(state, 0, "revised");
    REQUIRE(r.ok());
    CHECK(state.entries.at(0).content == "revised");
    CHECK(state.entries.at(0).updated_step == 5);
    CHECK(state.entries.at(0).created_step == 0);
    CHECK(!state.entries.at(0).embedding.has_value());
}

TEST_CASE("update of a missing id is a diagnostic, not a crash") {
    MemoryState state;
    OpResult r = update_entry(state, 99, "x");
    CHECK(r.status == OpStatus::unknown_id);
    CHECK(state.entries.empty());
}

TEST_CASE("the id counter only moves on create") {
    MemoryState state;
    create_entry(state, "a");
    update_entry(state, 0, "b");
    OpResult r = create_entry(state, "c");
    CHECK(r.id == 1);

    // Same three-op run against the map oracle.
    OracleState oracle;
    oracle_apply(oracle, CreateAction{"a"}, 0);
    oracle_apply(oracle, UpdateAction{0, "b"}, 0);
    oracle_apply(oracle, CreateAction{"c"}, 0);
    CHECK(states_match(oracle, state));
}

TEST_CASE("deleted ids are never reassigned") {
    MemoryState state;
    create_entry(state, "first");
    delete_entry(state, 0);
    OpResult r = create_entry(state, "second");
    CHECK(r.id == 1);
    CHECK(state.entries.count(0) == 0);
}

TEST_CASE("scratchpad writes overwrite wholesale and leave entries alone") {
    MemoryState state;
    create_entry(state, "entry");
    write_scratchpad(state, "plan: first");
    write_scratchpad(state, "plan: second");
    CHECK(state.scratchpad == "plan: second");
    CHECK(state.entries.size() == 1);
    CHECK(state.next_id == 1);

    write_scratchpad(state, "");
    CHECK(state.scratchpad.empty());

    // And entry CRUD leaves the scratchpad alone.
    write_scratchpad(state, "kept");
    create_entry(state, "another");
    update_entry(state, 1, "changed");
    delete_entry(state, 1);
    CHECK(state.scratchpad == "kept");
}

TEST_CASE("apply_sequence composes in order and never aborts") {
    MemoryState state;
    ActionSequence seq;
    seq.actions = {CreateAction{"a"}, UpdateAction{0, "b"}, DeleteAction{0}};
    ApplyReport report = apply_sequence(state, seq);
    CHECK(state.entries.empty());
    CHECK(report.outcomes.size() == 3);
    CHECK(report.failure_count() == 0);
}

TEST_CASE("reads are collected, not applied") {
    MemoryState state;
    ActionSequence seq;
    seq.actions = {ReadAction{"q"}, CreateAction{"a"}};
    ApplyReport report = apply_sequence(state, seq);
    CHECK(state.entries.size() == 1);
    REQUIRE(report.pending_reads.size() == 1);
    CHECK(report.pending_reads[0] == "q");
}

TEST_CASE("a failing action yields a diagnostic and the rest proceed") {
    MemoryState state;
    ActionSequence seq;
    seq.actions = {UpdateAction{7, "x"}, CreateAction{"lands"}};
    ApplyReport report = apply_sequence(state, seq);
    CHECK(report.failure_count() == 1);
    CHECK(report.outcomes[0].status == OpStatus::unknown_id);
    CHECK(state.entries.size() == 1);
}

TEST_CASE("a read-only sequence leaves the state bit-identical") {
    MemoryState state;
    create_entry(state, "alpha");
    write_scratchpad(state, "pad");
    const nlohmann::json before = state_to_json(state);

    ActionSequence seq;
    seq.actions = {ReadAction{"one"}, ReadAction{"two"}, ReadAction{"three"}};
    apply_sequence(state, seq);
    CHECK(state_to_json(state) == before);
}

TEST_CASE("random 50-op sequences match the naive map oracle") {
    SeededRng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        MemoryState state;
        OracleState oracle;
        for (int op = 0; op < 50; ++op) {
            state.step = op;
            MemoryAction action = random_action(rng, SchemaVariant::prompt());
            ActionSequence seq;
            seq.actions.push_back(action);
            apply_sequence(state, seq);
            oracle_apply(oracle, action, op);
        }
        CHECK(states_match(oracle, state));
    }
}

TEST_CASE("assigned ids are exactly 0..next_id-1 with no repeats") {
    SeededRng rng(31337);
    MemoryState state;
    std::vector<std::int64_t> assigned;
    for (int op = 0; op < 200; ++op) {
        const std::uint64_t kind = rng.below(3);
        if (kind == 0) {
            OpResult r = create_entry(state, random_payload(rng));
            REQUIRE(r.ok());
            assigned.push_back(r.id);
        } else if (kind == 1 && !state.entries.empty()) {
            delete_entry(state, state.entries.begin()->first);
        } else if (!state.entries.empty()) {
            update_entry(state, state.entries.rbegin()->first, random_payload(rng));
        }
    }
    REQUIRE(assigned.size() == static_cast<std::size_t>(state.next_id));
    for (std::size_t i = 0; i < assigned.size(); ++i) {
        CHECK(assigned[i] == static_cast<std::int64_t>(i));
    }
}

TEST_CASE("state json round-trips without embeddings") {
    MemoryState state;
    state.step = 2;
    create_entry(state, "keep");
    create_entry(state, "drop");
    delete_entry(state, 1);
    write_scratchpad(state, "notes");
    state.entries.at(0).embedding = std::vector<float>{0.5f};

    const nlohmann::json j = state_to_json(state);
    CHECK(j["entries"].size() == 1);
    CHECK(!j["entries"][0].contains("embedding"));

    MemoryState back = state_from_json(j);
    CHECK(back.next_id == 2);
    CHECK(back.scratchpad == "notes");
    CHECK(back.entries.at(0).content == "keep");
    CHECK(!back.entries.at(0).embedding.has_value());
}

TEST_CASE("snapshot validation rejects inconsistent documents") {
    nlohmann::json bad = {
        {"scratchpad", ""},
        {"next_id", 1},
        {"entries",
         {{{"id", 3}, {"content", "x"}, {"created_step", 0}, {"updated_step", 0}}}},
    };
    CHECK_THROWS_AS(state_from_json(bad), std::invalid_argument);
}
