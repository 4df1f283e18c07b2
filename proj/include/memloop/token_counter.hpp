#pragma once

#include <memory>
#include <string_view>

namespace memloop {

// Estimates token cost of a text span. Chunk budgets are expressed in tokens,
// but the artifact must not hard-require any specific model tokenizer, so the
// counter is pluggable.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual double count(std::string_view text) const = 0;
};

// Default estimator: whitespace-delimited words scaled by a tokens-per-word
// ratio. A ratio of 1.0 makes token arithmetic exact for tests.
class WordRatioCounter : public TokenCounter {
public:
    explicit WordRatioCounter(double tokens_per_word = 1.3);

    double count(std::string_view text) const override;
    double tokens_per_word() const { return ratio_; }

private:
    double ratio_;
};

std::shared_ptr<const TokenCounter> default_token_counter();

}  // namespace memloop
