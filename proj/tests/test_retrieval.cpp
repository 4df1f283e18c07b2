#include "memloop/retrieval.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"

using namespace memloop;
using namespace memloop::testing;

TEST_CASE("hash embeddings are deterministic and unit norm") {
    HashEmbedder embedder;
    const auto a = embedder.embed("abc");
    const auto b = embedder.embed("abc");
    CHECK(a == b);
    CHECK(a.size() == 256);

    double norm_sq = 0.0;
    for (float v : a) norm_sq += static_cast<double>(v) * v;
    CHECK(std::abs(std::sqrt(norm_sq) - 1.0) < 1e-6);
}

TEST_CASE("word-repeated text gives parallel count vectors") {
    // By hand: "abc" tokenizes to one word with the single 3-gram "abc";
    // "abc abc" yields the same gram twice. The count vectors are c and 2c,
    // so the cosine is exactly 1.
    HashEmbedder embedder;
    const auto once = embedder.embed("abc");
    const auto twice = embedder.embed("abc abc");
    CHECK(cosine_similarity(once, twice) == doctest::Approx(1.0).epsilon(1e-12));

    // Different words land in (almost surely) different buckets.
    const auto other = embedder.embed("xyzw");
    CHECK(cosine_similarity(once, other) < 0.99);
}

TEST_CASE("embedding blank text is an error") {
    HashEmbedder embedder;
    CHECK_THROWS_AS(embedder.embed(""), EmptyTextError);
    CHECK_THROWS_AS(embedder.embed("   "), EmptyTextError);
}

TEST_CASE("case differences do not change the vector") {
    HashEmbedder embedder;
    CHECK(embedder.embed("Harbor Festival") == embedder.embed("harbor festival"));
}

TEST_CASE("top_k on empty memory returns nothing") {
    MemoryState state;
    Retriever retriever(std::make_shared<HashEmbedder>());
    CHECK(retriever.top_k(state, "anything", 6).empty());
}

TEST_CASE("top_k validates its inputs") {
    MemoryState state;
    Retriever retriever(std::make_shared<HashEmbedder>());
    CHECK_THROWS_AS(retriever.top_k(state, "", 3), EmptyQueryError);
    CHECK_THROWS_AS(retriever.top_k(state, "q", 0), std::invalid_argument);
}

TEST_CASE("top_k equals the brute-force oracle on random memories") {
    SeededRng rng(404);
    auto provider = std::make_shared<HashEmbedder>();
    Retriever retriever(provider);

    MemoryState state;
    for (int i = 0; i < 20; ++i) create_entry(state, random_document(rng, 4, 12));

    for (int trial = 0; trial < 10; ++trial) {
        const std::string query = random_document(rng, 2, 6);
        const auto got = retriever.top_k(state, query, 5);
        const auto expected = brute_force_top_k(state, *provider, query, 5);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == expected[i].id);
            CHECK(got[i].similarity == doctest::Approx(expected[i].similarity).epsilon(1e-12));
        }
    }
}

TEST_CASE("oracle equivalence holds at a thousand entries") {
    SeededRng rng(1000);
    auto provider = std::make_shared<HashEmbedder>();
    Retriever retriever(provider);
    MemoryState state;
    for (int i = 0; i < 1000; ++i) create_entry(state, random_document(rng, 3, 10));

    for (int trial = 0; trial < 3; ++trial) {
        const std::string query = random_document(rng, 2, 6);
        const auto got = retriever.top_k(state, query, 12);
        const auto want = brute_force_top_k(state, *provider, query, 12);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == want[i].id);
            CHECK(got[i].similarity == doctest::Approx(want[i].similarity).epsilon(1e-12));
        }
    }
}

TEST_CASE("ties break by ascending id") {
    auto provider = std::make_shared<HashEmbedder>();
    Retriever retriever(provider);
    MemoryState state;
    create_entry(state, "twin content");
    create_entry(state, "twin content");
    create_entry(state, "twin content");
    const auto got = retriever.top_k(state, "twin content", 3);
    REQUIRE(got.size() == 3);
    CHECK(got[0].id == 0);
    CHECK(got[1].id == 1);
    CHECK(got[2].id == 2);
}

TEST_CASE("top_k(k) is a prefix of top_k(k+1)") {
    SeededRng rng(777);
    Retriever retriever(std::make_shared<HashEmbedder>());
    MemoryState state;
    for (int i = 0; i < 30; ++i) create_entry(state, random_document(rng, 3, 9));

    const std::string query = "castle bridge festival";
    for (int k = 1; k < 12; ++k) {
        const auto small = retriever.top_k(state, query, k);
        const auto big = retriever.top_k(state, query, k + 1);
        REQUIRE(small.size() <= big.size());
        for (std::size_t i = 0; i < small.size(); ++i) CHECK(small[i].id == big[i].id);
    }
}

TEST_CASE("lazy fills cache on the entries and match precomputed results") {
    SeededRng rng(55);
    auto provider = std::make_shared<HashEmbedder>();
    Retriever retriever(provider);

    MemoryState lazy;
    for (int i = 0; i < 12; ++i) create_entry(lazy, random_document(rng, 3, 8));
    MemoryState eager = lazy;
    for (auto& [id, entry] : eager.entries) entry.embedding = provider->embed(entry.content);

    const auto from_lazy = retriever.top_k(lazy, "river harbor", 4);
    const auto from_eager = retriever.top_k(eager, "river harbor", 4);
    REQUIRE(from_lazy.size() == from_eager.size());
    for (std::size_t i = 0; i < from_lazy.size(); ++i) {
        CHECK(from_lazy[i].id == from_eager[i].id);
        CHECK(from_lazy[i].similarity == from_eager[i].similarity);
    }
    for (const auto& [id, entry] : lazy.entries) CHECK(entry.embedding.has_value());
}

TEST_CASE("concurrent lookups through one retriever are safe") {
    SeededRng rng(91);
    Retriever retriever(std::make_shared<HashEmbedder>());
    MemoryState state;
    for (int i = 0; i < 50; ++i) create_entry(state, random_document(rng, 3, 8));

    std::atomic<bool> mismatch{false};
    const auto reference = retriever.top_k(state, "museum", 6);
    auto probe = [&]() {
        for (int i = 0; i < 20; ++i) {
            const auto got = retriever.top_k(state, "museum", 6);
            if (got.size() != reference.size()) mismatch = true;
            for (std::size_t j = 0; j < got.size() && j < reference.size(); ++j) {
                if (got[j].id != reference[j].id) mismatch = true;
            }
        }
    };
    std::thread a(probe), b(probe), c(probe);
    a.join();
    b.join();
    c.join();
    CHECK(!mismatch.load());
}

namespace {

struct EmbedServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> failures_left{0};

    explicit EmbedServer(std::size_t dimension) {
        server.Post("/embed", [this, dimension](const httplib::Request& req,
                                                httplib::Response& res) {
            if (failures_left.fetch_sub(1) > 0) {
                res.status = 500;
                return;
            }
            HashEmbedder embedder(dimension);
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json vectors = nlohmann::json::array();
            for (const auto& text : body.at("input")) {
                vectors.push_back(embedder.embed(text.get<std::string>()));
            }
            res.set_content(nlohmann::json{{"embeddings", vectors}}.dump(), "application/json");
        });
        failures_left = 0;
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~EmbedServer() {
        server.stop();
        thread.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("remote embedder speaks the batch wire format") {
    EmbedServer srv(64);
    RemoteEmbedder remote({srv.endpoint(), "/embed", 64, 2000, 2});
    HashEmbedder local(64);

    const auto got = remote.embed("harbor festival");
    const auto want = local.embed("harbor festival");
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-6));
    }
    CHECK_THROWS_AS(remote.embed("  "), EmptyTextError);
}

TEST_CASE("remote embedder retries 500s and then succeeds") {
    EmbedServer srv(32);
    srv.failures_left = 2;
    RemoteEmbedder remote({srv.endpoint(), "/embed", 32, 2000, 3});
    CHECK(remote.embed("retry me").size() == 32);
}

TEST_CASE("remote embedder surfaces a dead endpoint as ProviderUnavailable") {
    RemoteEmbedder remote({"http://127.0.0.1:1", "/embed", 16, 200, 0});
    CHECK_THROWS_AS(remote.embed("unreachable"), ProviderUnavailableError);
}
