#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace memloop {

// The five primitive memory actions a policy can emit in one turn. Create,
// Read, Update and Delete act on the entry store; Scratchpad overwrites the
// always-visible scratchpad slot.
struct CreateAction {
    std::string content;
    bool operator==(const CreateAction&) const = default;
};
struct ReadAction {
    std::string query;
    bool operator==(const ReadAction&) const = default;
};
struct UpdateAction {
    std::int64_t id = -1;
    std::string content;
    bool operator==(const UpdateAction&) const = default;
};
struct DeleteAction {
    std::int64_t id = -1;
    bool operator==(const DeleteAction&) const = default;
};
struct ScratchpadAction {
    std::string content;
    bool operator==(const ScratchpadAction&) const = default;
};

using MemoryAction =
    std::variant<CreateAction, ReadAction, UpdateAction, DeleteAction, ScratchpadAction>;

enum class ActionKind { create, read, update, del, scratchpad };

ActionKind kind_of(const MemoryAction& action);
const char* to_string(ActionKind kind);

enum class ParseIssue { unknown_tag, unclosed_tag, missing_id, empty_payload };

struct ParseDiagnostic {
    ParseIssue issue;
    std::string detail;
};

const char* to_string(ParseIssue issue);
std::string format_diagnostic(const ParseDiagnostic& d);

// One policy turn, decoded: actions in emission order, the optional terminal
// answer, and whatever the parser had to skip.
struct ActionSequence {
    std::vector<MemoryAction> actions;
    std::optional<std::string> final_answer;
    std::vector<ParseDiagnostic> diagnostics;
};

// The two tag vocabularies in use. "table" is the compact API form
// (create_memory/read_memory/update_memory/delete_memory); "prompt" is the
// form the agent prompt teaches (add_memory/update_query/modify_memory/
// delete_memory, with update_memory repurposed as the scratchpad write).
enum class SchemaKind { table, prompt };

struct SchemaVariant {
    SchemaKind kind = SchemaKind::table;

    static SchemaVariant table() { return {SchemaKind::table}; }
    static SchemaVariant prompt() { return {SchemaKind::prompt}; }

    bool operator==(const SchemaVariant&) const = default;
};

const char* to_string(SchemaKind kind);
SchemaVariant schema_from_string(std::string_view name);  // throws std::invalid_argument

// Total over arbitrary text: well-formed known tags become actions (document
// order), <answer>...</answer> becomes final_answer, everything else degrades
// to diagnostics. Payloads are trimmed at both ends and otherwise verbatim.
ActionSequence parse_actions(std::string_view text, const SchemaVariant& schema);

struct UnrenderableActionError : std::runtime_error {
    explicit UnrenderableActionError(const std::string& what) : std::runtime_error(what) {}
};

// Inverse of parse_actions for fixtures and scripted policies:
// parse_actions(render_actions(seq, v), v) reproduces seq (modulo diagnostics)
// whenever payloads contain no tag delimiters. Throws UnrenderableActionError
// for empty required payloads, negative ids, or a Scratchpad action under the
// table schema (which has no scratchpad tag).
std::string render_actions(const ActionSequence& seq, const SchemaVariant& schema);

nlohmann::json action_to_json(const MemoryAction& action);
MemoryAction action_from_json(const nlohmann::json& j);  // throws std::invalid_argument

}  // namespace memloop
