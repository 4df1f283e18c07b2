#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace memloop {

struct SchemaMismatchError : std::runtime_error {
    explicit SchemaMismatchError(const std::string& what) : std::runtime_error(what) {}
};
struct TooFewDocsError : std::invalid_argument {
    explicit TooFewDocsError(const std::string& what) : std::invalid_argument(what) {}
};
struct TooFewSamplesError : std::invalid_argument {
    explicit TooFewSamplesError(const std::string& what) : std::invalid_argument(what) {}
};

// One source QA sample: a question, its accepted answers, and the documents
// required to answer it.
struct SourceQA {
    std::string question;
    std::vector<std::string> gold_answers;
    std::vector<std::string> relevant_docs;
    std::string source_id;
};

struct DocumentSlot {
    std::string text;
    bool relevant = false;
    std::optional<int> question_index;  // owning question for relevant docs
};

// A constructed episode: an ordered (seed-shuffled) document stream plus the
// questions it must answer. Every relevant doc of every included question
// appears exactly once.
struct TaskInstance {
    std::vector<std::string> questions;
    std::vector<std::vector<std::string>> gold;  // aligned with questions
    std::vector<DocumentSlot> documents;
    std::uint64_t seed = 0;
    int total_docs = 0;
    bool distractors_reused = false;  // pool was too small; sampled with replacement
};

struct IngestResult {
    std::vector<SourceQA> samples;
    std::vector<std::string> distractor_pool;  // non-gold paragraphs across the file
    std::size_t skipped = 0;
};

// Reads a JSONL QA file. Two row shapes are accepted (see README): the
// canonical {"question", "answers", "contexts": [{"text", "relevant"}]} form,
// and the raw HotpotQA form with "context" + "supporting_facts". Malformed
// rows are skipped and counted. Throws UnreadableFileError when the file
// cannot be read and SchemaMismatchError when zero rows parse.
IngestResult ingest(const std::filesystem::path& path);

// Needle-in-a-haystack construction: the sample's relevant docs plus enough
// sampled distractors to reach total_docs, jointly shuffled by the seed.
TaskInstance build_niah(const SourceQA& sample, const std::vector<std::string>& distractor_pool,
                        int total_docs, std::uint64_t seed);

// Multi-question construction: num_questions samples are drawn, all their
// relevant docs pooled, padded with distractors to total_docs and shuffled.
TaskInstance build_multiq(const std::vector<SourceQA>& samples,
                          const std::vector<std::string>& distractor_pool, int num_questions,
                          int total_docs, std::uint64_t seed);

nlohmann::json task_to_json(const TaskInstance& task);
TaskInstance task_from_json(const nlohmann::json& j);  // throws std::invalid_argument

std::vector<TaskInstance> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::filesystem::path& path, const std::vector<TaskInstance>& tasks);

}  // namespace memloop
