#pragma once

// Test-side oracles and generators. Everything here is deliberately naive and
// independent of the library's implementation paths: the map replay mirrors
// the CRUD contract with a plain std::map, and the retrieval oracle is an
// exhaustive cosine scan.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memloop/action_protocol.hpp"
#include "memloop/memory_core.hpp"
#include "memloop/retrieval.hpp"
#include "memloop/rng.hpp"
#include "memloop/text.hpp"

namespace memloop::testing {

// ---------------------------------------------------------------------------
// CRUD oracle: replay an action sequence against a plain ordered map.

struct OracleEntry {
    std::string content;
    int created_step = 0;
    int updated_step = 0;
};

struct OracleState {
    std::map<std::int64_t, OracleEntry> entries;
    std::string scratchpad;
    std::int64_t next_id = 0;
};

inline void oracle_apply(OracleState& state, const MemoryAction& action, int step) {
    switch (kind_of(action)) {
        case ActionKind::create: {
            const auto& a = std::get<CreateAction>(action);
            std::string trimmed = trim(a.content);
            if (trimmed.empty()) return;
            state.entries[state.next_id] = {trimmed, step, step};
            ++state.next_id;
            break;
        }
        case ActionKind::update: {
            const auto& a = std::get<UpdateAction>(action);
            std::string trimmed = trim(a.content);
            if (trimmed.empty()) return;
            auto it = state.entries.find(a.id);
            if (it == state.entries.end()) return;
            it->second.content = trimmed;
            it->second.updated_step = step;
            break;
        }
        case ActionKind::del:
            state.entries.erase(std::get<DeleteAction>(action).id);
            break;
        case ActionKind::scratchpad:
            state.scratchpad = std::get<ScratchpadAction>(action).content;
            break;
        case ActionKind::read:
            break;  // reads never mutate
    }
}

inline bool states_match(const OracleState& oracle, const MemoryState& state) {
    if (oracle.next_id != state.next_id) return false;
    if (oracle.scratchpad != state.scratchpad) return false;
    if (oracle.entries.size() != state.entries.size()) return false;
    auto it = state.entries.begin();
    for (const auto& [id, entry] : oracle.entries) {
        if (it->first != id) return false;
        if (it->second.content != entry.content) return false;
        if (it->second.created_step != entry.created_step) return false;
        if (it->second.updated_step != entry.updated_step) return false;
        ++it;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Retrieval oracle: exhaustive cosine scan with the id tie-break.

inline std::vector<ScoredEntry> brute_force_top_k(const MemoryState& state,
                                                  EmbeddingProvider& provider,
                                                  const std::string& query, int k) {
    const std::vector<float> qv = provider.embed(query);
    std::vector<ScoredEntry> all;
    for (const auto& [id, entry] : state.entries) {
        const std::vector<float> ev = provider.embed(entry.content);
        all.push_back({id, cosine_similarity(qv, ev)});
    }
    std::sort(all.begin(), all.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
    return all;
}

// ---------------------------------------------------------------------------
// Generators.

inline std::string random_payload(SeededRng& rng, std::size_t min_len = 1,
                                  std::size_t max_len = 24) {
    // No '<' or '>' so payloads cannot collide with tag delimiters; no leading
    // or trailing whitespace so parse-side trimming is the identity.
    static constexpr char kAlphabet[] =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;:!?'-";
    const std::size_t len = min_len + rng.below(max_len - min_len + 1);
    std::string out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        out += kAlphabet[rng.below(sizeof(kAlphabet) - 1)];
    }
    std::string trimmed = trim(out);
    return trimmed.empty() ? "x" : trimmed;
}

// A random action over the given schema's renderable vocabulary. Ids are drawn
// small so collisions with real entries are common.
inline MemoryAction random_action(SeededRng& rng, const SchemaVariant& schema) {
    const bool allow_scratchpad = schema.kind == SchemaKind::prompt;
    const std::uint64_t kinds = allow_scratchpad ? 5 : 4;
    switch (rng.below(kinds)) {
        case 0: return CreateAction{random_payload(rng)};
        case 1: return ReadAction{random_payload(rng)};
        case 2:
            return UpdateAction{static_cast<std::int64_t>(rng.below(1000)), random_payload(rng)};
        case 3: return DeleteAction{static_cast<std::int64_t>(rng.below(1000))};
        default: return ScratchpadAction{random_payload(rng)};
    }
}

inline ActionSequence random_sequence(SeededRng& rng, const SchemaVariant& schema,
                                      std::size_t max_actions = 8, bool with_answer_half = true) {
    ActionSequence seq;
    const std::size_t n = rng.below(max_actions + 1);
    for (std::size_t i = 0; i < n; ++i) seq.actions.push_back(random_action(rng, schema));
    if (with_answer_half && rng.below(2) == 0) seq.final_answer = random_payload(rng);
    return seq;
}

inline bool sequences_equal(const ActionSequence& a, const ActionSequence& b) {
    return a.actions == b.actions && a.final_answer == b.final_answer;
}

// Small deterministic vocabulary document generator for corpus-shaped tests.
inline std::string random_document(SeededRng& rng, std::size_t min_words, std::size_t max_words) {
    static const char* kVocab[] = {
        "river",  "mountain", "archive", "treaty",   "festival", "harbor",  "novel",
        "bridge", "museum",   "comet",   "island",   "opera",    "railway", "garden",
        "battle", "castle",   "valley",  "painter",  "senate",   "orchard", "merchant",
        "lantern", "meadow",  "journal", "observatory", "harvest", "quarry", "tunnel",
    };
    const std::size_t n_vocab = sizeof(kVocab) / sizeof(kVocab[0]);
    const std::size_t n = min_words + rng.below(max_words - min_words + 1);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += kVocab[rng.below(n_vocab)];
        if (i % 11 == 10) out += '.';
    }
    out += '.';
    return out;
}

}  // namespace memloop::testing
