#pragma once

#include <cmath>
#include <cstdint>

namespace emojivec {

// splitmix64: tiny, fast, and fully specified, so seeded runs reproduce
// bit-for-bit on any platform (std:: distributions do not guarantee that).
class Rng {
  public:
    explicit Rng(uint64_t seed = 0x9E3779B97F4A7C15ULL) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
    float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

    // uniform in [0, bound)
    uint64_t next_below(uint64_t bound) { return bound ? next_u64() % bound : 0; }

    // uniform int in [lo, hi] inclusive
    int64_t next_int(int64_t lo, int64_t hi) {
        return lo + int64_t(next_below(uint64_t(hi - lo + 1)));
    }

    double next_gaussian() {
        // Box-Muller; one value per call keeps the stream position obvious.
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename T> void shuffle(T* data, size_t n) {
        for (size_t i = n; i > 1; --i) {
            size_t j = size_t(next_below(i));
            std::swap(data[i - 1], data[j]);
        }
    }

  private:
    uint64_t state_;
};

// Derives independent per-worker or per-purpose streams from one seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return r.next_u64();
}

} // namespace emojivec
