#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "memloop/action_protocol.hpp"
#include "memloop/memory_core.hpp"
#include "memloop/retrieval.hpp"
#include "memloop/reward.hpp"
#include "memloop/task_builder.hpp"
#include "memloop/token_counter.hpp"

namespace memloop {

struct EmptyCorpusError : std::invalid_argument {
    explicit EmptyCorpusError(const std::string& what) : std::invalid_argument(what) {}
};
struct EpisodeDoneError : std::logic_error {
    EpisodeDoneError() : std::logic_error("step() called on a finished episode") {}
};

struct EpisodeConfig {
    int chunk_size_tokens = 4096;
    int retrieve_k = 6;
    SchemaVariant schema = SchemaVariant::table();
    int chunk_overlap_tokens = 0;
    int max_parse_diagnostics_shown = 8;

    void validate() const;  // throws std::invalid_argument
};

// What the policy sees at one step. The scratchpad is always present; the
// retrieved list reflects the queries issued at the previous step (Read
// latency) and never contains the scratchpad.
struct Observation {
    std::optional<std::string> env_chunk;       // absent in the answer phase
    std::string scratchpad;
    std::vector<std::pair<std::int64_t, std::string>> retrieved;
    std::vector<std::string> active_queries;    // the queries behind `retrieved`
    std::optional<std::string> pending_question;  // answer phase only
    int step = 0;
    std::vector<std::string> diagnostics;       // carried over from the previous step
};

enum class Phase { streaming, answering, done };
const char* to_string(Phase phase);

struct TranscriptStep {
    Observation observation;  // what the policy responded to
    std::string policy_text;
    ActionSequence actions;
    std::vector<std::string> diagnostics;  // parse + apply issues of this step
};

struct EpisodeState {
    TaskInstance task;
    MemoryState memory;
    std::vector<std::string> chunks;
    std::size_t cursor = 0;          // next chunk to emit
    std::size_t question_cursor = 0; // next question to answer
    std::vector<std::string> pending_read_queries;
    Phase phase = Phase::streaming;
    std::vector<TranscriptStep> transcript;
    std::vector<std::string> answers;  // aligned with task.questions
    Observation last_observation;      // the one currently awaiting a response
};

// Deterministic chunk plan over the concatenated document stream. Documents
// are separated by "=== Document N ===" marker lines that are never split.
struct ChunkPlan {
    std::vector<std::string> atoms;  // words and whole marker lines
    std::vector<bool> is_marker;
    std::vector<std::pair<std::size_t, std::size_t>> windows;  // [start, end) atom ranges
};

ChunkPlan plan_chunks(const std::vector<std::string>& documents, const EpisodeConfig& config,
                      const TokenCounter& counter);

std::vector<std::string> chunk_stream(const std::vector<std::string>& documents,
                                      const EpisodeConfig& config, const TokenCounter& counter);

// A policy maps (task, observation) to raw response text. Implementations
// must not touch memory except through the actions they emit as text.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string respond(const TaskInstance& task, const Observation& observation) = 0;
};

struct EpisodeRun {
    EpisodeState state;       // final state, transcript included
    TrajectoryRecord record;  // answers + per-step actions, reward unset
};

// The episode loop: streams chunks, applies parsed action sequences, enforces
// the one-step Read latency, then runs the answer phase one question per turn.
class Environment {
public:
    Environment(EpisodeConfig config, std::shared_ptr<EmbeddingProvider> provider,
                std::shared_ptr<const TokenCounter> counter = default_token_counter());

    std::pair<EpisodeState, Observation> reset(const TaskInstance& task);

    // Applies the policy response for the pending observation and produces the
    // next one; nullopt means the episode just finished. Throws
    // EpisodeDoneError once the phase is done.
    std::optional<Observation> step(EpisodeState& state, const std::string& policy_text);

    EpisodeRun run_episode(const TaskInstance& task, Policy& policy,
                           const std::string& task_id = {});

    const EpisodeConfig& config() const { return config_; }

private:
    std::vector<std::pair<std::int64_t, std::string>> evaluate_reads(EpisodeState& state);

    EpisodeConfig config_;
    std::shared_ptr<const TokenCounter> counter_;
    Retriever retriever_;
};

nlohmann::json observation_to_json(const Observation& obs);
nlohmann::json transcript_step_to_json(const TranscriptStep& step);
std::string transcript_to_jsonl(const std::vector<TranscriptStep>& transcript);

}  // namespace memloop
