#pragma once

#include <cmath>
#include <cstdint>

namespace locind {

/// SplitMix64 stream. Streams are keyed by (seed, a, b) so that any subject or
/// replicate can be generated independently of the others.
class Rng {
public:
    explicit Rng(std::uint64_t state) noexcept : state_(state) {}

    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
        std::uint64_t s = mix(seed ^ 0x9E3779B97F4A7C15ULL);
        s = mix(s ^ (a + 0xD1B54A32D192ED03ULL));
        s = mix(s ^ (b + 0x8CB92BA72F3D8DD7ULL));
        return Rng(s);
    }

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform on (0, 1].
    double uniform() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    /// Exponential with the given rate; +inf when rate is 0.
    double exponential(double rate) noexcept {
        if (rate <= 0.0) return INFINITY;
        return -std::log(uniform()) / rate;
    }

    bool bernoulli(double p) noexcept { return uniform() <= p; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's multiply-shift with rejection
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = -n % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (one value per call).
    double normal() noexcept {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace locind
