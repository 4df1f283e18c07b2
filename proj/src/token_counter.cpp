#include "memloop/token_counter.hpp"

#include <stdexcept>

#include "memloop/text.hpp"

namespace memloop {

WordRatioCounter::WordRatioCounter(double tokens_per_word) : ratio_(tokens_per_word) {
    if (ratio_ <= 0.0) throw std::invalid_argument("tokens_per_word must be positive");
}

double WordRatioCounter::count(std::string_view text) const {
    return static_cast<double>(split_words(text).size()) * ratio_;
}

std::shared_ptr<const TokenCounter> default_token_counter() {
    static const auto counter = std::make_shared<const WordRatioCounter>();
    return counter;
}

}  // namespace memloop
