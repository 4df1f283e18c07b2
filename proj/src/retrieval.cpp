#include "memloop/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "memloop/rng.hpp"
#include "memloop/text.hpp"

namespace memloop {

std::vector<std::vector<float>> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

HashEmbedder::HashEmbedder(std::size_t dimension, std::size_t ngram)
    : dimension_(dimension), ngram_(ngram) {
    if (dimension_ == 0) throw std::invalid_argument("HashEmbedder: dimension must be >= 1");
    if (ngram_ == 0) throw std::invalid_argument("HashEmbedder: ngram must be >= 1");
}

std::vector<float> HashEmbedder::embed(std::string_view text) {
    if (is_blank(text)) throw EmptyTextError{};

    std::vector<double> counts(dimension_, 0.0);
    const std::string lowered = to_lower(text);
    for (const std::string& word : split_words(lowered)) {
        if (word.size() < ngram_) {
            counts[fnv1a64(word) % dimension_] += 1.0;
            continue;
        }
        for (std::size_t i = 0; i + ngram_ <= word.size(); ++i) {
            std::string_view gram(word.data() + i, ngram_);
            counts[fnv1a64(gram) % dimension_] += 1.0;
        }
    }

    double norm_sq = 0.0;
    for (double c : counts) norm_sq += c * c;
    const double norm = std::sqrt(norm_sq);
    std::vector<float> out(dimension_, 0.0f);
    if (norm > 0.0) {
        for (std::size_t i = 0; i < dimension_; ++i) {
            out[i] = static_cast<float>(counts[i] / norm);
        }
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw std::invalid_argument("RemoteEmbedder: endpoint is required");
    }
    if (config_.dimension == 0) {
        throw std::invalid_argument("RemoteEmbedder: dimension is required");
    }
}

std::vector<float> RemoteEmbedder::embed(std::string_view text) {
    return embed_batch({std::string(text)}).front();
}

std::vector<std::vector<float>> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) {
    for (const auto& t : texts) {
        if (is_blank(t)) throw EmptyTextError{};
    }
    if (texts.empty()) return {};

    nlohmann::json body = {{"input", texts}};
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 1)));
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        auto res = client.Post(config_.path, payload, "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "http " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProviderUnavailableError("embedding service returned http " +
                                           std::to_string(res->status));
        }
        auto parsed = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.contains("embeddings")) {
            throw ProviderUnavailableError("embedding service returned malformed body: " +
                                           res->body.substr(0, 200));
        }
        std::vector<std::vector<float>> out;
        for (const auto& row : parsed["embeddings"]) {
            std::vector<float> vec = row.get<std::vector<float>>();
            if (vec.size() != config_.dimension) {
                throw ProviderUnavailableError("embedding dimension mismatch");
            }
            double norm_sq = 0.0;
            for (float v : vec) norm_sq += static_cast<double>(v) * v;
            const double norm = std::sqrt(norm_sq);
            if (norm > 0.0) {
                for (float& v : vec) v = static_cast<float>(v / norm);
            }
            out.push_back(std::move(vec));
        }
        if (out.size() != texts.size()) {
            throw ProviderUnavailableError("embedding count mismatch");
        }
        return out;
    }
    throw ProviderUnavailableError("embedding service unreachable after " +
                                   std::to_string(config_.max_retries + 1) +
                                   " attempts: " + last_error);
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return dot;
}

Retriever::Retriever(std::shared_ptr<EmbeddingProvider> provider)
    : provider_(std::move(provider)) {
    if (!provider_) throw std::invalid_argument("Retriever: provider is required");
}

void Retriever::fill_missing(MemoryState& state) {
    std::lock_guard<std::mutex> lock(fill_mutex_);
    for (auto& [id, entry] : state.entries) {
        if (!entry.embedding) {
            entry.embedding = provider_->embed(entry.content);
        }
    }
}

std::vector<ScoredEntry> Retriever::top_k(MemoryState& state, std::string_view query, int k) {
    if (k < 1) throw std::invalid_argument("top_k: k must be >= 1");
    if (is_blank(query)) throw EmptyQueryError{};

    const std::vector<float> query_vec = provider_->embed(query);
    fill_missing(state);

    std::vector<ScoredEntry> scored;
    scored.reserve(state.entries.size());
    for (const auto& [id, entry] : state.entries) {
        scored.push_back({id, cosine_similarity(query_vec, *entry.embedding)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (scored.size() > static_cast<std::size_t>(k)) {
        scored.resize(static_cast<std::size_t>(k));
    }
    return scored;
}

}  // namespace memloop
