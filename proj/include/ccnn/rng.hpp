#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace ccnn {

// splitmix64; used to derive independent stream seeds from (seed, purpose).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_str(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic RNG with explicit distributions so results are identical
// across platforms/compilers (std::normal_distribution is not portable).
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    Rng(uint64_t seed, const std::string& stream) : eng_(splitmix64(seed ^ hash_str(stream))) {}

    uint64_t bits() { return eng_(); }

    // Uniform in [0, 1): 53-bit mantissa construction.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one fresh pair per two draws, cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Uniform integer in [0, n).
    uint64_t index(uint64_t n) {
        // Rejection-free modulo is biased for huge n; n here is small (< 2^32).
        return eng_() % n;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ccnn
