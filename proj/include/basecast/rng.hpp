#ifndef BASECAST_RNG_HPP
#define BASECAST_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace basecast {

/**
 * Seeded random source with explicit value derivations.
 *
 * All uniform/normal draws are mapped from raw mt19937_64 output by hand so
 * that a given seed produces the same stream on every platform (the stdlib
 * distributions are implementation-defined, the engine itself is not).
 */
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed), base_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so the log is finite
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derive an independent generator for a named substream of the original seed.
    Rng fork(uint64_t stream) const {
        return Rng(seed_mix(base_ ^ ((stream + 1) * 0x9E3779B97F4A7C15ull)));
    }

private:
    static uint64_t seed_mix(uint64_t z) {
        // splitmix64 finalizer
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    uint64_t base_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace basecast

#endif // BASECAST_RNG_HPP
