#pragma once

#include <cmath>
#include <cstdint>

namespace tlab {

// sm64: a counter-based, splittable random generator built on the SplitMix64
// finalizer. A stream is identified by a 64-bit key; draw i of a stream is
// mix64(key + i * GAMMA). split(tag) derives the key of an independent stream,
// so corpora, dropout masks and shuffles can each own a stream addressed by
// (seed, purpose, index) without sharing counters.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix64(seed + GAMMA)), counter_(0) {}
    Rng(std::uint64_t key, std::uint64_t counter, bool raw) : key_(key), counter_(counter) { (void)raw; }

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * GAMMA); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; consumes two draws per call so the
    // stream position stays a pure function of the call count.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * PI * u2);
    }

    // Integer in [0, n). Lemire multiply-shift; bias is O(n / 2^64).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent stream derived from this stream's key and a tag.
    Rng split(std::uint64_t tag) const {
        return Rng(mix64(key_ ^ mix64(tag + GAMMA)), 0, true);
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ull;
    static constexpr double PI = 3.14159265358979323846;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace tlab
