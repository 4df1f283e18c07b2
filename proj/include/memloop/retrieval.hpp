#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memloop/memory_core.hpp"

namespace memloop {

struct EmptyTextError : std::invalid_argument {
    EmptyTextError() : std::invalid_argument("embed: text is empty") {}
};
struct EmptyQueryError : std::invalid_argument {
    EmptyQueryError() : std::invalid_argument("top_k: query is empty") {}
};
struct ProviderUnavailableError : std::runtime_error {
    explicit ProviderUnavailableError(const std::string& what) : std::runtime_error(what) {}
};

// Produces unit-norm vectors of a fixed dimension. embed() must be a pure
// function of the text for deterministic providers.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;

    // Throws EmptyTextError on blank input; ProviderUnavailableError when a
    // remote backend cannot be reached.
    virtual std::vector<float> embed(std::string_view text) = 0;

    virtual std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts);
};

// Offline default: lowercases, splits into words, hashes character n-grams of
// each word into buckets, counts, and L2-normalizes. Pure and fast, so the
// whole test suite runs without a model server.
class HashEmbedder : public EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dimension = 256, std::size_t ngram = 3);

    std::size_t dimension() const override { return dimension_; }
    std::vector<float> embed(std::string_view text) override;

private:
    std::size_t dimension_;
    std::size_t ngram_;
};

struct RemoteEmbedderConfig {
    std::string endpoint;         // e.g. "http://127.0.0.1:8801"
    std::string path = "/embed";  // POST target
    std::size_t dimension = 0;    // expected vector width
    int timeout_ms = 10000;
    int max_retries = 3;
};

// Speaks {"input": [str]} -> {"embeddings": [[float]]} over HTTP. Vectors are
// re-normalized locally so the unit-norm invariant holds regardless of the
// service.
class RemoteEmbedder : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::size_t dimension() const override { return config_.dimension; }
    std::vector<float> embed(std::string_view text) override;
    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override;

private:
    RemoteEmbedderConfig config_;
};

struct ScoredEntry {
    std::int64_t id = -1;
    double similarity = 0.0;
};

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

// Exact top-k over the entry store (the scratchpad has no entry and can never
// be returned). Missing entry embeddings are computed through the provider and
// cached on the entries; fills are serialized so concurrent lookups through
// the same Retriever are safe.
class Retriever {
public:
    explicit Retriever(std::shared_ptr<EmbeddingProvider> provider);

    // Ordered by descending cosine similarity, ties broken by ascending id.
    // Throws EmptyQueryError on blank queries and std::invalid_argument for
    // k < 1.
    std::vector<ScoredEntry> top_k(MemoryState& state, std::string_view query, int k);

    EmbeddingProvider& provider() { return *provider_; }

private:
    void fill_missing(MemoryState& state);

    std::shared_ptr<EmbeddingProvider> provider_;
    std::mutex fill_mutex_;
};

}  // namespace memloop
