#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace charattr::nn {

// Deterministic PRNG: xoshiro256** (Blackman/Vigna) seeded through
// splitmix64. Identical seeds give identical draw sequences on every
// platform; nothing here depends on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), unbiased via rejection sampling.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Fisher-Yates shuffle, draw order fixed by the stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

// FNV-1a, the checksum used for alphabets, datasets and parameter files.
// The byte-level form has its own name so string literals can never bind
// to the (pointer, length) signature by accident.
inline uint64_t fnv1a64_bytes(const void* data, size_t len,
                              uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64_bytes(s.data(), s.size(), h);
}

// Sub-seed derivation: mix the top-level seed with a purpose tag so each
// consumer (shuffle, init, dropout, ...) gets an independent stream.
inline uint64_t derive_seed(uint64_t seed, std::string_view purpose) {
    uint64_t x = seed ^ fnv1a64(purpose);
    return Rng::splitmix64(x);
}

inline uint64_t derive_seed(uint64_t seed, std::string_view purpose, uint64_t index) {
    uint64_t x = seed ^ fnv1a64(purpose) ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng::splitmix64(x);
}

}  // namespace charattr::nn
