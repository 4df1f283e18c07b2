#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace memloop {

// FNV-1a over arbitrary bytes. Used for seed derivation, hash embeddings and
// run ids; must stay stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

// Derives an independent sub-seed from a base seed and a purpose tag, so all
// randomness in a run flows from one --seed flag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

// Thin wrapper over mt19937_64 with portable bounded draws. std::shuffle and
// std::uniform_int_distribution are implementation-defined, so shuffling and
// sampling go through below() to keep outputs identical across machines.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Unbiased draw in [0, n). n must be >= 1.
    std::uint64_t below(std::uint64_t n);

    double unit();  // [0, 1)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // Sample n distinct indices from [0, pool). n <= pool.
    std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t n);

private:
    std::mt19937_64 gen_;
};

}  // namespace memloop
