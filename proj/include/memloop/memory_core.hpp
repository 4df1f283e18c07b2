#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "memloop/action_protocol.hpp"

namespace memloop {

// One stored memory item. The embedding is a lazily-filled retrieval cache:
// unset after create/update, filled (and kept) by the retrieval module.
struct MemoryEntry {
    std::int64_t id = -1;
    std::string content;
    std::optional<std::vector<float>> embedding;
    int created_step = 0;
    int updated_step = 0;
};

// The full memory at one step: entry store plus the scratchpad slot. Ids are
// handed out by next_id and never reused; the scratchpad lives outside the
// entry map and is untouched by entry CRUD.
struct MemoryState {
    std::map<std::int64_t, MemoryEntry> entries;
    std::string scratchpad;
    std::int64_t next_id = 0;
    int step = 0;
};

enum class OpStatus { ok, empty_content, unknown_id };
const char* to_string(OpStatus status);

// Per-operation outcome. Failures are diagnostics rather than exceptions:
// policies hallucinate ids and blank payloads, and a rollout must survive that.
struct OpResult {
    OpStatus status = OpStatus::ok;
    std::int64_t id = -1;  // create: the assigned id; update/delete: the target id
    std::string diagnostic;

    bool ok() const { return status == OpStatus::ok; }
};

OpResult create_entry(MemoryState& state, std::string_view content);
OpResult update_entry(MemoryState& state, std::int64_t id, std::string_view content);
OpResult delete_entry(MemoryState& state, std::int64_t id);

// Wholesale overwrite; empty content clears the pad.
void write_scratchpad(MemoryState& state, std::string_view content);

struct ActionOutcome {
    MemoryAction action;
    OpStatus status = OpStatus::ok;
    std::string diagnostic;
};

struct ApplyReport {
    std::vector<ActionOutcome> outcomes;
    std::vector<std::string> pending_reads;  // Read queries, in emission order

    std::size_t failure_count() const;
    std::vector<std::string> failure_diagnostics() const;
};

// Applies every non-Read action in emission order; Reads are collected, not
// applied. Never aborts mid-sequence: each failing action yields a diagnostic
// and the rest proceed.
ApplyReport apply_sequence(MemoryState& state, const ActionSequence& seq);

// Snapshot format: {"scratchpad", "next_id", "entries": [...]}. Embeddings are
// cache state and are not serialized.
nlohmann::json state_to_json(const MemoryState& state);
MemoryState state_from_json(const nlohmann::json& j);  // throws std::invalid_argument

}  // namespace memloop
