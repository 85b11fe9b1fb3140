#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace gazekit {

// All randomness in the project flows through this header. std:: distributions
// are not reproducible across standard libraries, so the generators and the
// uniform/normal conversions are spelled out here and never change.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Folds extra values into a base seed; used to derive independent streams
// (per subject, per sample, per epoch, ...) from one user-visible seed.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> vals) {
    uint64_t s = base;
    (void)splitmix64(s);
    for (uint64_t v : vals) {
        s ^= v + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        (void)splitmix64(s);
    }
    return s;
}

// xoshiro256** seeded through splitmix64.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // Unbiased integer in [0, bound) via rejection sampling.
    uint32_t below(uint32_t bound) {
        if (bound <= 1) return 0;
        const uint32_t limit = UINT32_MAX - UINT32_MAX % bound;
        uint32_t v;
        do {
            v = next_u32();
        } while (v >= limit);
        return v % bound;
    }

    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }  // [0,1)
    float unitf() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }  // [0,1)

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<uint32_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = below(static_cast<uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace gazekit
