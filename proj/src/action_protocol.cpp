#include "memloop/action_protocol.hpp"

#include <array>
#include <cctype>
#include <limits>
#include <span>

#include "memloop/text.hpp"

namespace memloop {

namespace {

enum class TagRole { create, read, update, del, scratchpad, answer };

struct TagSpec {
    std::string_view name;
    TagRole role;
};

// Tag vocabularies. Names are the wire format and must not drift.
constexpr std::array<TagSpec, 5> kTableTags = {{
    {"create_memory", TagRole::create},
    {"read_memory", TagRole::read},
    {"update_memory", TagRole::update},
    {"delete_memory", TagRole::del},
    {"answer", TagRole::answer},
}};

constexpr std::array<TagSpec, 6> kPromptTags = {{
    {"add_memory", TagRole::create},
    {"update_query", TagRole::read},
    {"modify_memory", TagRole::update},
    {"delete_memory", TagRole::del},
    {"update_memory", TagRole::scratchpad},
    {"answer", TagRole::answer},
}};

std::span<const TagSpec> tags_for(const SchemaVariant& schema) {
    if (schema.kind == SchemaKind::table) return kTableTags;
    return kPromptTags;
}

bool is_tag_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Parses "Memory 3: content" / "3: content" / "Memory 2" payloads. The
// "Memory" prefix is optional in both schemas since models mix the forms.
struct IndexedPayload {
    std::optional<std::int64_t> id;
    std::string content;
};

IndexedPayload parse_indexed(std::string_view payload) {
    IndexedPayload out;
    std::string_view rest = trim_view(payload);
    constexpr std::string_view kPrefix = "memory";
    if (rest.size() >= kPrefix.size()) {
        std::string head = to_lower(rest.substr(0, kPrefix.size()));
        if (head == kPrefix) rest = trim_view(rest.substr(kPrefix.size()));
    }
    std::size_t digits = 0;
    while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) {
        ++digits;
    }
    if (digits == 0) return out;
    std::int64_t id = 0;
    bool overflow = false;
    for (std::size_t i = 0; i < digits; ++i) {
        const int digit = rest[i] - '0';
        if (id > (std::numeric_limits<std::int64_t>::max() - digit) / 10) {
            overflow = true;
            break;
        }
        id = id * 10 + digit;
    }
    if (overflow) return out;  // absurd id, treated like a missing one
    out.id = id;
    rest = trim_view(rest.substr(digits));
    if (!rest.empty() && rest.front() == ':') rest = rest.substr(1);
    out.content = trim(rest);
    return out;
}

}  // namespace

ActionKind kind_of(const MemoryAction& action) {
    struct Visitor {
        ActionKind operator()(const CreateAction&) const { return ActionKind::create; }
        ActionKind operator()(const ReadAction&) const { return ActionKind::read; }
        ActionKind operator()(const UpdateAction&) const { return ActionKind::update; }
        ActionKind operator()(const DeleteAction&) const { return ActionKind::del; }
        ActionKind operator()(const ScratchpadAction&) const { return ActionKind::scratchpad; }
    };
    return std::visit(Visitor{}, action);
}

const char* to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::create: return "create";
        case ActionKind::read: return "read";
        case ActionKind::update: return "update";
        case ActionKind::del: return "delete";
        case ActionKind::scratchpad: return "scratchpad";
    }
    return "?";
}

const char* to_string(ParseIssue issue) {
    switch (issue) {
        case ParseIssue::unknown_tag: return "unknown_tag";
        case ParseIssue::unclosed_tag: return "unclosed_tag";
        case ParseIssue::missing_id: return "missing_id";
        case ParseIssue::empty_payload: return "empty_payload";
    }
    return "?";
}

std::string format_diagnostic(const ParseDiagnostic& d) {
    return std::string(to_string(d.issue)) + ": " + d.detail;
}

const char* to_string(SchemaKind kind) {
    return kind == SchemaKind::table ? "table" : "prompt";
}

SchemaVariant schema_from_string(std::string_view name) {
    if (name == "table") return SchemaVariant::table();
    if (name == "prompt") return SchemaVariant::prompt();
    throw std::invalid_argument("unknown schema variant: " + std::string(name));
}

ActionSequence parse_actions(std::string_view text, const SchemaVariant& schema) {
    ActionSequence seq;
    const auto tags = tags_for(schema);

    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find('<', pos);
        if (open == std::string_view::npos) break;

        std::size_t cursor = open + 1;
        bool closing = cursor < text.size() && text[cursor] == '/';
        if (closing) ++cursor;
        std::size_t name_start = cursor;
        while (cursor < text.size() && is_tag_char(text[cursor])) ++cursor;
        if (cursor == name_start || cursor >= text.size() || text[cursor] != '>') {
            pos = open + 1;  // stray '<', not a tag
            continue;
        }
        std::string_view name = text.substr(name_start, cursor - name_start);
        std::size_t after_open = cursor + 1;

        if (closing) {
            // Stray closing tag; its opener (if any) already consumed it.
            pos = after_open;
            continue;
        }

        const TagSpec* spec = nullptr;
        for (const auto& t : tags) {
            if (t.name == name) {
                spec = &t;
                break;
            }
        }
        if (spec == nullptr) {
            seq.diagnostics.push_back({ParseIssue::unknown_tag, std::string(name)});
            pos = after_open;
            continue;
        }

        std::string closer = "</" + std::string(name) + ">";
        std::size_t close = text.find(closer, after_open);
        if (close == std::string_view::npos) {
            seq.diagnostics.push_back({ParseIssue::unclosed_tag, std::string(name)});
            pos = after_open;
            continue;
        }
        std::string payload = trim(text.substr(after_open, close - after_open));
        pos = close + closer.size();

        switch (spec->role) {
            case TagRole::create:
                if (payload.empty()) {
                    seq.diagnostics.push_back({ParseIssue::empty_payload, std::string(name)});
                } else {
                    seq.actions.push_back(CreateAction{std::move(payload)});
                }
                break;
            case TagRole::read:
                if (payload.empty()) {
                    seq.diagnostics.push_back({ParseIssue::empty_payload, std::string(name)});
                } else {
                    seq.actions.push_back(ReadAction{std::move(payload)});
                }
                break;
            case TagRole::update: {
                IndexedPayload parsed = parse_indexed(payload);
                if (!parsed.id) {
                    seq.diagnostics.push_back(
                        {ParseIssue::missing_id, std::string(name) + " needs \"Memory <id>: ...\""});
                } else if (parsed.content.empty()) {
                    seq.diagnostics.push_back({ParseIssue::empty_payload, std::string(name)});
                } else {
                    seq.actions.push_back(UpdateAction{*parsed.id, std::move(parsed.content)});
                }
                break;
            }
            case TagRole::del: {
                IndexedPayload parsed = parse_indexed(payload);
                if (!parsed.id) {
                    seq.diagnostics.push_back(
                        {ParseIssue::missing_id, std::string(name) + " needs \"Memory <id>\""});
                } else {
                    seq.actions.push_back(DeleteAction{*parsed.id});
                }
                break;
            }
            case TagRole::scratchpad:
                // Empty payload is meaningful: it clears the scratchpad.
                seq.actions.push_back(ScratchpadAction{std::move(payload)});
                break;
            case TagRole::answer:
                seq.final_answer = std::move(payload);
                break;
        }
    }
    return seq;
}

std::string render_actions(const ActionSequence& seq, const SchemaVariant& schema) {
    const bool table = schema.kind == SchemaKind::table;
    std::string out;
    auto emit = [&out](std::string_view piece) {
        if (!out.empty()) out += '\n';
        out += piece;
    };

    for (const auto& action : seq.actions) {
        switch (kind_of(action)) {
            case ActionKind::create: {
                const auto& a = std::get<CreateAction>(action);
                if (is_blank(a.content)) throw UnrenderableActionError("create without content");
                emit(table ? "<create_memory>" + a.content + "</create_memory>"
                           : "<add_memory>\n" + a.content + "\n</add_memory>");
                break;
            }
            case ActionKind::read: {
                const auto& a = std::get<ReadAction>(action);
                if (is_blank(a.query)) throw UnrenderableActionError("read without query");
                emit(table ? "<read_memory>" + a.query + "</read_memory>"
                           : "<update_query>\n" + a.query + "\n</update_query>");
                break;
            }
            case ActionKind::update: {
                const auto& a = std::get<UpdateAction>(action);
                if (a.id < 0) throw UnrenderableActionError("update with invalid id");
                if (is_blank(a.content)) throw UnrenderableActionError("update without content");
                const std::string id = std::to_string(a.id);
                emit(table ? "<update_memory>" + id + ": " + a.content + "</update_memory>"
                           : "<modify_memory>\nMemory " + id + ": " + a.content +
                                 "\n</modify_memory>");
                break;
            }
            case ActionKind::del: {
                const auto& a = std::get<DeleteAction>(action);
                if (a.id < 0) throw UnrenderableActionError("delete with invalid id");
                const std::string id = std::to_string(a.id);
                emit(table ? "<delete_memory>" + id + "</delete_memory>"
                           : "<delete_memory>\nMemory " + id + "\n</delete_memory>");
                break;
            }
            case ActionKind::scratchpad: {
                if (table) {
                    throw UnrenderableActionError("the table schema has no scratchpad tag");
                }
                const auto& a = std::get<ScratchpadAction>(action);
                emit("<update_memory>\n" + a.content + "\n</update_memory>");
                break;
            }
        }
    }
    if (seq.final_answer) {
        emit("<answer>" + *seq.final_answer + "</answer>");
    }
    return out;
}

nlohmann::json action_to_json(const MemoryAction& action) {
    nlohmann::json j;
    j["kind"] = to_string(kind_of(action));
    switch (kind_of(action)) {
        case ActionKind::create: j["content"] = std::get<CreateAction>(action).content; break;
        case ActionKind::read: j["query"] = std::get<ReadAction>(action).query; break;
        case ActionKind::update:
            j["id"] = std::get<UpdateAction>(action).id;
            j["content"] = std::get<UpdateAction>(action).content;
            break;
        case ActionKind::del: j["id"] = std::get<DeleteAction>(action).id; break;
        case ActionKind::scratchpad:
            j["content"] = std::get<ScratchpadAction>(action).content;
            break;
    }
    return j;
}

MemoryAction action_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "create") return CreateAction{j.at("content").get<std::string>()};
    if (kind == "read") return ReadAction{j.at("query").get<std::string>()};
    if (kind == "update") {
        return UpdateAction{j.at("id").get<std::int64_t>(), j.at("content").get<std::string>()};
    }
    if (kind == "delete") return DeleteAction{j.at("id").get<std::int64_t>()};
    if (kind == "scratchpad") return ScratchpadAction{j.at("content").get<std::string>()};
    throw std::invalid_argument("unknown action kind: " + kind);
}

}  // namespace memloop
