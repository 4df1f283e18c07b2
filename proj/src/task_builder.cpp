#include "memloop/task_builder.hpp"

#include <algorithm>
#include <unordered_set>

#include "memloop/io.hpp"
#include "memloop/rng.hpp"
#include "memloop/text.hpp"

namespace memloop {

namespace {

std::vector<std::string> answers_of(const nlohmann::json& row) {
    std::vector<std::string> out;
    if (row.contains("answers") && row["answers"].is_array()) {
        for (const auto& a : row["answers"]) {
            if (a.is_string() && !is_blank(a.get<std::string>())) {
                out.push_back(a.get<std::string>());
            }
        }
    } else if (row.contains("answer") && row["answer"].is_string()) {
        if (!is_blank(row["answer"].get<std::string>())) {
            out.push_back(row["answer"].get<std::string>());
        }
    }
    return out;
}

std::string paragraph_text(const std::string& title, const std::string& body) {
    if (title.empty()) return body;
    return title + "\n" + body;
}

// Canonical form: "contexts": [{"text", "relevant", "title"?}, ...].
bool read_canonical_contexts(const nlohmann::json& row, std::vector<std::string>& relevant,
                             std::vector<std::string>& distractors) {
    if (!row.contains("contexts") || !row["contexts"].is_array()) return false;
    for (const auto& ctx : row["contexts"]) {
        if (!ctx.is_object() || !ctx.contains("text") || !ctx["text"].is_string()) continue;
        std::string body = ctx["text"].get<std::string>();
        if (is_blank(body)) continue;
        std::string title;
        if (ctx.contains("title") && ctx["title"].is_string()) {
            title = ctx["title"].get<std::string>();
        }
        const bool rel = ctx.value("relevant", false);
        (rel ? relevant : distractors).push_back(paragraph_text(title, body));
    }
    return true;
}

// Raw HotpotQA form: "context": [[title, [sentences...]], ...] with
// "supporting_facts": [[title, sentence_idx], ...] marking the gold paragraphs.
bool read_hotpot_contexts(const nlohmann::json& row, std::vector<std::string>& relevant,
                          std::vector<std::string>& distractors) {
    if (!row.contains("context") || !row["context"].is_array()) return false;
    std::unordered_set<std::string> gold_titles;
    if (row.contains("supporting_facts") && row["supporting_facts"].is_array()) {
        for (const auto& fact : row["supporting_facts"]) {
            if (fact.is_array() && !fact.empty() && fact[0].is_string()) {
                gold_titles.insert(fact[0].get<std::string>());
            }
        }
    }
    for (const auto& para : row["context"]) {
        if (!para.is_array() || para.size() < 2 || !para[0].is_string() || !para[1].is_array()) {
            continue;
        }
        const std::string title = para[0].get<std::string>();
        std::string body;
        for (const auto& sentence : para[1]) {
            if (!sentence.is_string()) continue;
            if (!body.empty()) body += ' ';
            body += sentence.get<std::string>();
        }
        if (is_blank(body)) continue;
        (gold_titles.count(title) ? relevant : distractors).push_back(paragraph_text(title, body));
    }
    return true;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path) {
    const JsonlResult raw = read_jsonl(path);
    IngestResult result;
    result.skipped = raw.bad_lines;

    for (const auto& row : raw.rows) {
        if (!row.is_object()) {
            ++result.skipped;
            continue;
        }
        std::vector<std::string> relevant;
        std::vector<std::string> distractors;
        const bool have_contexts = read_canonical_contexts(row, relevant, distractors) ||
                                   read_hotpot_contexts(row, relevant, distractors);
        // Distractor paragraphs are useful even when the row itself is invalid.
        result.distractor_pool.insert(result.distractor_pool.end(), distractors.begin(),
                                      distractors.end());

        SourceQA sample;
        if (row.contains("question") && row["question"].is_string()) {
            sample.question = trim(row["question"].get<std::string>());
        }
        sample.gold_answers = answers_of(row);
        sample.relevant_docs = std::move(relevant);
        if (row.contains("id") && row["id"].is_string()) {
            sample.source_id = row["id"].get<std::string>();
        } else if (row.contains("_id") && row["_id"].is_string()) {
            sample.source_id = row["_id"].get<std::string>();
        } else {
            sample.source_id = "row" + std::to_string(result.samples.size() + result.skipped);
        }

        if (sample.question.empty() || sample.gold_answers.empty() ||
            sample.relevant_docs.empty() || !have_contexts) {
            ++result.skipped;
            continue;
        }
        result.samples.push_back(std::move(sample));
    }

    if (result.samples.empty()) {
        throw SchemaMismatchError("no usable rows in " + path.string() + " (" +
                                  std::to_string(result.skipped) + " skipped)");
    }
    return result;
}

namespace {

TaskInstance assemble(std::vector<std::string> questions, std::vector<std::vector<std::string>> gold,
                      std::vector<DocumentSlot> relevant_slots,
                      const std::vector<std::string>& distractor_pool, int total_docs,
                      std::uint64_t seed) {
    if (total_docs < static_cast<int>(relevant_slots.size())) {
        throw TooFewDocsError("total_docs " + std::to_string(total_docs) + " < " +
                              std::to_string(relevant_slots.size()) + " relevant docs");
    }
    const std::size_t needed = static_cast<std::size_t>(total_docs) - relevant_slots.size();
    if (needed > 0 && distractor_pool.empty()) {
        throw TooFewDocsError("distractor pool is empty but " + std::to_string(needed) +
                              " distractors are needed");
    }

    TaskInstance task;
    task.questions = std::move(questions);
    task.gold = std::move(gold);
    task.seed = seed;
    task.total_docs = total_docs;
    task.documents = std::move(relevant_slots);

    SeededRng rng(derive_seed(seed, "task_builder"));
    if (needed > 0) {
        if (needed <= distractor_pool.size()) {
            for (std::size_t idx : rng.sample_indices(distractor_pool.size(), needed)) {
                task.documents.push_back({distractor_pool[idx], false, std::nullopt});
            }
        } else {
            task.distractors_reused = true;
            for (std::size_t i = 0; i < needed; ++i) {
                std::size_t idx = static_cast<std::size_t>(rng.below(distractor_pool.size()));
                task.documents.push_back({distractor_pool[idx], false, std::nullopt});
            }
        }
    }
    rng.shuffle(task.documents);
    return task;
}

}  // namespace

TaskInstance build_niah(const SourceQA& sample, const std::vector<std::string>& distractor_pool,
                        int total_docs, std::uint64_t seed) {
    std::vector<DocumentSlot> slots;
    slots.reserve(sample.relevant_docs.size());
    for (const auto& doc : sample.relevant_docs) {
        slots.push_back({doc, true, 0});
    }
    return assemble({sample.question}, {sample.gold_answers}, std::move(slots), distractor_pool,
                    total_docs, seed);
}

TaskInstance build_multiq(const std::vector<SourceQA>& samples,
                          const std::vector<std::string>& distractor_pool, int num_questions,
                          int total_docs, std::uint64_t seed) {
    if (num_questions < 1 || num_questions > 10) {
        throw std::invalid_argument("num_questions must be in 1..10");
    }
    if (static_cast<int>(samples.size()) < num_questions) {
        throw TooFewSamplesError("need " + std::to_string(num_questions) + " samples, have " +
                                 std::to_string(samples.size()));
    }

    SeededRng pick_rng(derive_seed(seed, "multiq_pick"));
    std::vector<std::size_t> chosen =
        pick_rng.sample_indices(samples.size(), static_cast<std::size_t>(num_questions));

    std::vector<std::string> questions;
    std::vector<std::vector<std::string>> gold;
    std::vector<DocumentSlot> slots;
    for (int qi = 0; qi < num_questions; ++qi) {
        const SourceQA& s = samples[chosen[static_cast<std::size_t>(qi)]];
        questions.push_back(s.question);
        gold.push_back(s.gold_answers);
        for (const auto& doc : s.relevant_docs) {
            slots.push_back({doc, true, qi});
        }
    }
    return assemble(std::move(questions), std::move(gold), std::move(slots), distractor_pool,
                    total_docs, seed);
}

nlohmann::json task_to_json(const TaskInstance& task) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : task.documents) {
        nlohmann::json slot = {{"text", d.text}, {"relevant", d.relevant}};
        slot["q"] = d.question_index ? nlohmann::json(*d.question_index) : nlohmann::json(nullptr);
        docs.push_back(std::move(slot));
    }
    nlohmann::json j = {
        {"questions", task.questions},
        {"gold", task.gold},
        {"documents", std::move(docs)},
        {"seed", task.seed},
    };
    if (task.distractors_reused) j["distractors_reused"] = true;
    return j;
}

TaskInstance task_from_json(const nlohmann::json& j) {
    TaskInstance task;
    task.questions = j.at("questions").get<std::vector<std::string>>();
    task.gold = j.at("gold").get<std::vector<std::vector<std::string>>>();
    task.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& row : j.at("documents")) {
        DocumentSlot slot;
        slot.text = row.at("text").get<std::string>();
        slot.relevant = row.at("relevant").get<bool>();
        if (row.contains("q") && !row["q"].is_null()) {
            slot.question_index = row["q"].get<int>();
        }
        task.documents.push_back(std::move(slot));
    }
    task.total_docs = static_cast<int>(task.documents.size());
    task.distractors_reused = j.value("distractors_reused", false);
    if (task.questions.empty()) throw std::invalid_argument("task has no questions");
    if (task.questions.size() != task.gold.size()) {
        throw std::invalid_argument("questions/gold length mismatch");
    }
    if (task.documents.empty()) throw std::invalid_argument("task has no documents");
    return task;
}

std::vector<TaskInstance> load_tasks(const std::filesystem::path& path) {
    const JsonlResult raw = read_jsonl(path);
    if (raw.bad_lines > 0) {
        throw SchemaMismatchError("task file has unparseable lines: " + path.string());
    }
    std::vector<TaskInstance> tasks;
    tasks.reserve(raw.rows.size());
    for (const auto& row : raw.rows) tasks.push_back(task_from_json(row));
    return tasks;
}

void save_tasks(const std::filesystem::path& path, const std::vector<TaskInstance>& tasks) {
    std::vector<nlohmann::json> rows;
    rows.reserve(tasks.size());
    for (const auto& t : tasks) rows.push_back(task_to_json(t));
    write_jsonl(path, rows);
}

}  // namespace memloop
