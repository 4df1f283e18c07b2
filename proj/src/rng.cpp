#include "memloop/rng.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace memloop {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    char buf[16];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((base >> (8 * i)) & 0xff);
    for (int i = 0; i < 8; ++i) buf[8 + i] = static_cast<char>((index >> (8 * i)) & 0xff);
    std::uint64_t h = fnv1a64(tag);
    return fnv1a64(std::string_view(buf, sizeof(buf)), h);
}

std::uint64_t SeededRng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below: n must be >= 1");
    // 2^64 mod n == (0 - n) mod n in unsigned arithmetic; reject draws under it.
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x < threshold);
    return x % n;
}

double SeededRng::unit() {
    // 53 random bits, as in the canonical double conversion.
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
}

std::vector<std::size_t> SeededRng::sample_indices(std::size_t pool, std::size_t n) {
    if (n > pool) throw std::invalid_argument("sample_indices: n exceeds pool size");
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: only the first n slots need to be settled.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(below(pool - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
}

}  // namespace memloop
