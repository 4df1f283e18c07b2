#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "memloop/action_protocol.hpp"

namespace memloop {

struct LengthMismatchError : std::invalid_argument {
    explicit LengthMismatchError(const std::string& what) : std::invalid_argument(what) {}
};
struct NonPositiveClipError : std::invalid_argument {
    explicit NonPositiveClipError(const std::string& what) : std::invalid_argument(what) {}
};

// Standard extractive-QA normalization: lowercase, strip punctuation, drop
// English articles, collapse whitespace.
std::string normalize_answer(std::string_view text);

// 1 iff the normalized prediction equals some normalized gold, else 0.
// Exact match, not substring. golds must be non-empty.
int em_reward(std::string_view pred, const std::vector<std::string>& golds);

// Mean of per-question EM; the episode reward for multi-question tasks.
double task_reward(const std::vector<std::string>& preds,
                   const std::vector<std::vector<std::string>>& golds_per_question);

// A_i = r_i - mean(r). No standard-deviation normalization.
std::vector<double> group_advantage(const std::vector<double>& rewards);

// One rollout group of the same task: rewards plus their mean-subtracted
// advantages, which always sum to zero (within float error).
struct GroupAdvantage {
    std::string group_id;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

GroupAdvantage make_group_advantage(std::string group_id, std::vector<double> rewards);

struct GrpoOptions {
    bool clipped = true;  // false evaluates the plain ratio * advantage form
};

// Mean over samples of min(rho*A, clip(rho, 1-clip_low, 1+clip_high)*A),
// minus beta * mean(kl_terms). Pure computation on given ratios; performs no
// model updates. kl_terms may be empty when beta == 0.
double grpo_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                      double clip_low, double clip_high, double beta,
                      const std::vector<double>& kl_terms, const GrpoOptions& options = {});

struct TokenSpan {
    int step = 0;
    int length = 0;
};

// One completed rollout, as the scoring pipeline sees it.
struct TrajectoryRecord {
    std::string task_id;
    std::vector<std::string> answers;
    std::vector<ActionSequence> per_step_actions;
    std::vector<TokenSpan> token_spans;  // optional; empty when not tracked
    std::optional<double> reward;
    std::optional<int> training_step;  // tag for frequency-over-training series
};

// Counts actions by kind; all kinds present (zero included).
std::map<ActionKind, std::size_t> count_actions(const std::vector<ActionSequence>& steps);

struct ActionStats {
    std::size_t episodes = 0;
    std::map<std::string, double> mean_per_episode;  // kind name -> mean count
    // training step -> (kind name -> mean count), for records carrying a tag
    std::map<int, std::map<std::string, double>> per_training_step;
    std::map<int, std::size_t> episodes_per_training_step;
};

ActionStats action_stats(const std::vector<TrajectoryRecord>& trajectories);

// Plot-ready CSV: one row per training step (untagged records land on step 0).
std::string action_stats_csv(const ActionStats& stats);

nlohmann::json action_stats_to_json(const ActionStats& stats);

// The trajectory-level advantage applied uniformly across output-token spans:
// one value per span, all equal to the given advantage.
std::vector<double> distribute_advantage(const TrajectoryRecord& record, double advantage);

}  // namespace memloop
