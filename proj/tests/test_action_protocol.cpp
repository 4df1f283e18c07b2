#include "memloop/action_protocol.hpp"

#include <limits>

#include "doctest.h"
#include "helpers.hpp"

using namespace memloop;
using namespace memloop::testing;

TEST_CASE("prompt schema parses the standing-query example") {
    auto seq = parse_actions("<update_query>dance partner; Yulia Zagoruychenko.</update_query>",
                             SchemaVariant::prompt());
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{ReadAction{"dance partner; Yulia Zagoruychenko."}});
    CHECK(seq.diagnostics.empty());
}

TEST_CASE("prompt schema parses the indexed delete example") {
    auto seq = parse_actions("<delete_memory>Memory 2</delete_memory>", SchemaVariant::prompt());
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{DeleteAction{2}});
}

TEST_CASE("table schema extracts tags in document order") {
    auto seq = parse_actions("<create_memory>x</create_memory><read_memory>y</read_memory>",
                             SchemaVariant::table());
    REQUIRE(seq.actions.size() == 2);
    CHECK(seq.actions[0] == MemoryAction{CreateAction{"x"}});
    CHECK(seq.actions[1] == MemoryAction{ReadAction{"y"}});
}

TEST_CASE("modify without an index degrades to a diagnostic") {
    auto seq = parse_actions("<modify_memory>no index here</modify_memory>",
                             SchemaVariant::prompt());
    CHECK(seq.actions.empty());
    REQUIRE(seq.diagnostics.size() == 1);
    CHECK(seq.diagnostics[0].issue == ParseIssue::missing_id);
}

TEST_CASE("update payload keeps everything after the first colon") {
    auto seq = parse_actions("<modify_memory>Memory 4: note: keep the colon</modify_memory>",
                             SchemaVariant::prompt());
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{UpdateAction{4, "note: keep the colon"}});
}

TEST_CASE("table update payload uses the bare id form") {
    auto seq = parse_actions("<update_memory>3: revised</update_memory>", SchemaVariant::table());
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{UpdateAction{3, "revised"}});
}

TEST_CASE("prompt schema routes update_memory to the scratchpad") {
    auto seq = parse_actions("<update_memory>Memory 3: looks indexed</update_memory>",
                             SchemaVariant::prompt());
    REQUIRE(seq.actions.size() == 1);
    // Scratchpad payloads are verbatim, never parsed as an index.
    CHECK(seq.actions[0] == MemoryAction{ScratchpadAction{"Memory 3: looks indexed"}});
}

TEST_CASE("answer tag becomes final_answer, not an action") {
    auto seq = parse_actions("<answer> Paris </answer>", SchemaVariant::table());
    CHECK(seq.actions.empty());
    REQUIRE(seq.final_answer.has_value());
    CHECK(*seq.final_answer == "Paris");
}

TEST_CASE("unknown tags are skipped with diagnostics, not treated as answers") {
    auto seq = parse_actions(
        "<think>hmm</think><create_memory>kept</create_memory>", SchemaVariant::table());
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{CreateAction{"kept"}});
    CHECK(!seq.final_answer.has_value());
    REQUIRE(seq.diagnostics.size() == 1);
    CHECK(seq.diagnostics[0].issue == ParseIssue::unknown_tag);
}

TEST_CASE("unclosed tags degrade to diagnostics and parsing continues") {
    auto seq = parse_actions("<create_memory>never closed <read_memory>q</read_memory>",
                             SchemaVariant::table());
    // The opener's closer search eats nothing: read_memory still parses.
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{ReadAction{"q"}});
    REQUIRE(seq.diagnostics.size() == 1);
    CHECK(seq.diagnostics[0].issue == ParseIssue::unclosed_tag);
}

TEST_CASE("overflowing ids degrade to missing-id diagnostics") {
    auto seq = parse_actions("<delete_memory>99999999999999999999999</delete_memory>"
                             "<delete_memory>Memory 9223372036854775807</delete_memory>",
                             SchemaVariant::prompt());
    REQUIRE(seq.actions.size() == 1);  // int64 max still parses, the overflow does not
    CHECK(seq.actions[0] ==
          MemoryAction{DeleteAction{std::numeric_limits<std::int64_t>::max()}});
    REQUIRE(seq.diagnostics.size() == 1);
    CHECK(seq.diagnostics[0].issue == ParseIssue::missing_id);
}

TEST_CASE("parse is total on garbage") {
    SeededRng rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string junk;
        for (int j = 0; j < 64; ++j) {
            junk += static_cast<char>(32 + rng.below(95));
        }
        CHECK_NOTHROW(parse_actions(junk, SchemaVariant::table()));
        CHECK_NOTHROW(parse_actions(junk, SchemaVariant::prompt()));
    }
}

TEST_CASE("empty payloads are diagnostics except for the scratchpad") {
    auto seq = parse_actions("<add_memory>  </add_memory><update_memory></update_memory>",
                             SchemaVariant::prompt());
    REQUIRE(seq.actions.size() == 1);
    CHECK(seq.actions[0] == MemoryAction{ScratchpadAction{""}});
    REQUIRE(seq.diagnostics.size() == 1);
    CHECK(seq.diagnostics[0].issue == ParseIssue::empty_payload);
}

TEST_CASE("render matches the documented prompt-schema shapes") {
    ActionSequence seq;
    seq.actions.push_back(UpdateAction{1, "b"});
    CHECK(render_actions(seq, SchemaVariant::prompt()) ==
          "<modify_memory>\nMemory 1: b\n</modify_memory>");

    ActionSequence del;
    del.actions.push_back(DeleteAction{2});
    CHECK(render_actions(del, SchemaVariant::prompt()) ==
          "<delete_memory>\nMemory 2\n</delete_memory>");
}

TEST_CASE("render rejects unrenderable actions") {
    ActionSequence empty_create;
    empty_create.actions.push_back(CreateAction{"  "});
    CHECK_THROWS_AS(render_actions(empty_create, SchemaVariant::table()),
                    UnrenderableActionError);

    ActionSequence scratch;
    scratch.actions.push_back(ScratchpadAction{"pad"});
    CHECK_THROWS_AS(render_actions(scratch, SchemaVariant::table()), UnrenderableActionError);
    CHECK_NOTHROW(render_actions(scratch, SchemaVariant::prompt()));

    ActionSequence bad_id;
    bad_id.actions.push_back(DeleteAction{-4});
    CHECK_THROWS_AS(render_actions(bad_id, SchemaVariant::prompt()), UnrenderableActionError);
}

TEST_CASE("round trip holds for random sequences under both schemas") {
    for (SchemaVariant schema : {SchemaVariant::table(), SchemaVariant::prompt()}) {
        SeededRng rng(schema.kind == SchemaKind::table ? 11 : 12);
        for (int i = 0; i < 300; ++i) {
            ActionSequence seq = random_sequence(rng, schema);
            const std::string text = render_actions(seq, schema);
            ActionSequence back = parse_actions(text, schema);
            CHECK(sequences_equal(seq, back));
            CHECK(back.diagnostics.empty());
        }
    }
}

TEST_CASE("order is preserved for a five-action mixed sequence") {
    SeededRng rng(99);
    ActionSequence seq;
    seq.actions = {CreateAction{"alpha"}, ReadAction{"beta"}, UpdateAction{7, "gamma"},
                   DeleteAction{7}, ScratchpadAction{"delta"}};
    const std::string text = render_actions(seq, SchemaVariant::prompt());
    ActionSequence back = parse_actions(text, SchemaVariant::prompt());
    REQUIRE(back.actions.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(back.actions[i] == seq.actions[i]);
}

TEST_CASE("action json round-trips") {
    SeededRng rng(5);
    for (int i = 0; i < 100; ++i) {
        MemoryAction action = random_action(rng, SchemaVariant::prompt());
        CHECK(action_from_json(action_to_json(action)) == action);
    }
}
