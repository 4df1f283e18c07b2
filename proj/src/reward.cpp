#include "memloop/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "memloop/text.hpp"

namespace memloop {

std::string normalize_answer(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::ispunct(uc)) continue;
        lowered += static_cast<char>(std::tolower(uc));
    }
    std::string out;
    for (const std::string& word : split_words(lowered)) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

int em_reward(std::string_view pred, const std::vector<std::string>& golds) {
    if (golds.empty()) throw std::invalid_argument("em_reward: golds must be non-empty");
    const std::string norm_pred = normalize_answer(pred);
    for (const auto& gold : golds) {
        if (norm_pred == normalize_answer(gold)) return 1;
    }
    return 0;
}

double task_reward(const std::vector<std::string>& preds,
                   const std::vector<std::vector<std::string>>& golds_per_question) {
    if (preds.size() != golds_per_question.size()) {
        throw LengthMismatchError("task_reward: " + std::to_string(preds.size()) +
                                  " preds vs " + std::to_string(golds_per_question.size()) +
                                  " questions");
    }
    if (preds.empty()) throw std::invalid_argument("task_reward: no questions");
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        sum += em_reward(preds[i], golds_per_question[i]);
    }
    return sum / static_cast<double>(preds.size());
}

std::vector<double> group_advantage(const std::vector<double>& rewards) {
    if (rewards.empty()) throw std::invalid_argument("group_advantage: empty group");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    std::vector<double> advantages;
    advantages.reserve(rewards.size());
    for (double r : rewards) advantages.push_back(r - mean);
    return advantages;
}

GroupAdvantage make_group_advantage(std::string group_id, std::vector<double> rewards) {
    GroupAdvantage group;
    group.group_id = std::move(group_id);
    group.advantages = group_advantage(rewards);
    group.rewards = std::move(rewards);
    return group;
}

double grpo_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                      double clip_low, double clip_high, double beta,
                      const std::vector<double>& kl_terms, const GrpoOptions& options) {
    if (ratios.size() != advantages.size()) {
        throw LengthMismatchError("grpo_surrogate: ratios vs advantages");
    }
    if (ratios.empty()) throw std::invalid_argument("grpo_surrogate: empty batch");
    if (options.clipped && (clip_low <= 0.0 || clip_high <= 0.0)) {
        throw NonPositiveClipError("grpo_surrogate: clip ranges must be positive");
    }
    if (beta != 0.0 && kl_terms.size() != ratios.size()) {
        throw LengthMismatchError("grpo_surrogate: kl_terms vs ratios");
    }

    double sum = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double rho = ratios[i];
        const double adv = advantages[i];
        if (options.clipped) {
            const double clipped = std::clamp(rho, 1.0 - clip_low, 1.0 + clip_high);
            sum += std::min(rho * adv, clipped * adv);
        } else {
            sum += rho * adv;
        }
    }
    double objective = sum / static_cast<double>(ratios.size());

    if (beta != 0.0 && !kl_terms.empty()) {
        double kl_sum = 0.0;
        for (double k : kl_terms) kl_sum += k;
        objective -= beta * (kl_sum / static_cast<double>(kl_terms.size()));
    }
    return objective;
}

std::map<ActionKind, std::size_t> count_actions(const std::vector<ActionSequence>& steps) {
    std::map<ActionKind, std::size_t> counts = {
        {ActionKind::create, 0}, {ActionKind::read, 0},       {ActionKind::update, 0},
        {ActionKind::del, 0},    {ActionKind::scratchpad, 0},
    };
    for (const auto& seq : steps) {
        for (const auto& action : seq.actions) ++counts[kind_of(action)];
    }
    return counts;
}

namespace {

const std::vector<ActionKind> kAllKinds = {ActionKind::create, ActionKind::read,
                                           ActionKind::update, ActionKind::del,
                                           ActionKind::scratchpad};

}  // namespace

ActionStats action_stats(const std::vector<TrajectoryRecord>& trajectories) {
    ActionStats stats;
    stats.episodes = trajectories.size();

    std::map<ActionKind, double> totals;
    std::map<int, std::map<ActionKind, double>> step_totals;
    std::map<int, std::size_t> step_episodes;
    for (const auto& record : trajectories) {
        auto counts = count_actions(record.per_step_actions);
        const int tag = record.training_step.value_or(0);
        ++step_episodes[tag];
        for (const auto& [kind, n] : counts) {
            totals[kind] += static_cast<double>(n);
            step_totals[tag][kind] += static_cast<double>(n);
        }
    }

    for (ActionKind kind : kAllKinds) {
        const double total = totals.count(kind) ? totals[kind] : 0.0;
        stats.mean_per_episode[to_string(kind)] =
            stats.episodes == 0 ? 0.0 : total / static_cast<double>(stats.episodes);
    }
    for (const auto& [tag, kinds] : step_totals) {
        const double n = static_cast<double>(step_episodes[tag]);
        for (ActionKind kind : kAllKinds) {
            const double total = kinds.count(kind) ? kinds.at(kind) : 0.0;
            stats.per_training_step[tag][to_string(kind)] = total / n;
        }
        stats.episodes_per_training_step[tag] = step_episodes[tag];
    }
    return stats;
}

std::string action_stats_csv(const ActionStats& stats) {
    std::string csv = "training_step,create,read,update,delete,scratchpad,episodes\n";
    char buf[64];
    for (const auto& [tag, kinds] : stats.per_training_step) {
        csv += std::to_string(tag);
        for (const char* name : {"create", "read", "update", "delete", "scratchpad"}) {
            std::snprintf(buf, sizeof(buf), ",%.6f", kinds.at(name));
            csv += buf;
        }
        csv += ',';
        csv += std::to_string(stats.episodes_per_training_step.at(tag));
        csv += '\n';
    }
    return csv;
}

nlohmann::json action_stats_to_json(const ActionStats& stats) {
    nlohmann::json j;
    j["episodes"] = stats.episodes;
    j["mean_per_episode"] = stats.mean_per_episode;
    if (!stats.per_training_step.empty()) {
        nlohmann::json series = nlohmann::json::object();
        for (const auto& [tag, kinds] : stats.per_training_step) {
            series[std::to_string(tag)] = kinds;
        }
        j["per_training_step"] = std::move(series);
    }
    return j;
}

std::vector<double> distribute_advantage(const TrajectoryRecord& record, double advantage) {
    return std::vector<double>(record.token_spans.size(), advantage);
}

}  // namespace memloop
