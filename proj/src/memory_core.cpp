#include "memloop/memory_core.hpp"

#include <stdexcept>

#include "memloop/text.hpp"

namespace memloop {

const char* to_string(OpStatus status) {
    switch (status) {
        case OpStatus::ok: return "ok";
        case OpStatus::empty_content: return "empty_content";
        case OpStatus::unknown_id: return "unknown_id";
    }
    return "?";
}

OpResult create_entry(MemoryState& state, std::string_view content) {
    std::string trimmed = trim(content);
    if (trimmed.empty()) {
        return {OpStatus::empty_content, -1, "create: content is empty"};
    }
    MemoryEntry entry;
    entry.id = state.next_id++;
    entry.content = std::move(trimmed);
    entry.created_step = state.step;
    entry.updated_step = state.step;
    const std::int64_t id = entry.id;
    state.entries.emplace(id, std::move(entry));
    return {OpStatus::ok, id, {}};
}

OpResult update_entry(MemoryState& state, std::int64_t id, std::string_view content) {
    std::string trimmed = trim(content);
    if (trimmed.empty()) {
        return {OpStatus::empty_content, id, "update: content is empty"};
    }
    auto it = state.entries.find(id);
    if (it == state.entries.end()) {
        return {OpStatus::unknown_id, id, "update: no entry with id " + std::to_string(id)};
    }
    it->second.content = std::move(trimmed);
    it->second.updated_step = state.step;
    it->second.embedding.reset();  // stale after a content change
    return {OpStatus::ok, id, {}};
}

OpResult delete_entry(MemoryState& state, std::int64_t id) {
    auto it = state.entries.find(id);
    if (it == state.entries.end()) {
        return {OpStatus::unknown_id, id, "delete: no entry with id " + std::to_string(id)};
    }
    state.entries.erase(it);
    return {OpStatus::ok, id, {}};
}

void write_scratchpad(MemoryState& state, std::string_view content) {
    state.scratchpad.assign(content.data(), content.size());
}

std::size_t ApplyReport::failure_count() const {
    std::size_t n = 0;
    for (const auto& o : outcomes) {
        if (o.status != OpStatus::ok) ++n;
    }
    return n;
}

std::vector<std::string> ApplyReport::failure_diagnostics() const {
    std::vector<std::string> out;
    for (const auto& o : outcomes) {
        if (o.status != OpStatus::ok) out.push_back(o.diagnostic);
    }
    return out;
}

ApplyReport apply_sequence(MemoryState& state, const ActionSequence& seq) {
    ApplyReport report;
    report.outcomes.reserve(seq.actions.size());
    for (const auto& action : seq.actions) {
        ActionOutcome outcome;
        outcome.action = action;
        switch (kind_of(action)) {
            case ActionKind::create: {
                OpResult r = create_entry(state, std::get<CreateAction>(action).content);
                outcome.status = r.status;
                outcome.diagnostic = r.diagnostic;
                break;
            }
            case ActionKind::read:
                report.pending_reads.push_back(std::get<ReadAction>(action).query);
                break;
            case ActionKind::update: {
                const auto& a = std::get<UpdateAction>(action);
                OpResult r = update_entry(state, a.id, a.content);
                outcome.status = r.status;
                outcome.diagnostic = r.diagnostic;
                break;
            }
            case ActionKind::del: {
                OpResult r = delete_entry(state, std::get<DeleteAction>(action).id);
                outcome.status = r.status;
                outcome.diagnostic = r.diagnostic;
                break;
            }
            case ActionKind::scratchpad:
                write_scratchpad(state, std::get<ScratchpadAction>(action).content);
                break;
        }
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

nlohmann::json state_to_json(const MemoryState& state) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [id, entry] : state.entries) {
        entries.push_back({
            {"id", entry.id},
            {"content", entry.content},
            {"created_step", entry.created_step},
            {"updated_step", entry.updated_step},
        });
    }
    return {
        {"scratchpad", state.scratchpad},
        {"next_id", state.next_id},
        {"entries", std::move(entries)},
    };
}

MemoryState state_from_json(const nlohmann::json& j) {
    MemoryState state;
    state.scratchpad = j.at("scratchpad").get<std::string>();
    state.next_id = j.at("next_id").get<std::int64_t>();
    for (const auto& row : j.at("entries")) {
        MemoryEntry entry;
        entry.id = row.at("id").get<std::int64_t>();
        entry.content = row.at("content").get<std::string>();
        entry.created_step = row.at("created_step").get<int>();
        entry.updated_step = row.at("updated_step").get<int>();
        if (entry.id < 0 || entry.id >= state.next_id) {
            throw std::invalid_argument("memory snapshot violates next_id > id");
        }
        if (entry.updated_step < entry.created_step) {
            throw std::invalid_argument("memory snapshot has updated_step < created_step");
        }
        if (!state.entries.emplace(entry.id, std::move(entry)).second) {
            throw std::invalid_argument("memory snapshot has duplicate ids");
        }
    }
    return state;
}

}  // namespace memloop
