#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dsac {

/// SplitMix64 finalizer. Used to derive independent seeds from structured keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic random stream.
///
/// Streams are identified by a root seed plus a path of integer keys, e.g.
/// (seed, iteration, trajectory). Two streams with the same path produce the
/// same numbers regardless of the order in which they were created. Doubles
/// are built from the top 53 bits so output does not depend on the standard
/// library's distribution implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(splitmix64(seed)), engine_(key_) {}

    /// Child stream keyed by `index`; does not advance this stream.
    RngStream split(std::uint64_t index) const {
        return RngStream(key_, index);
    }

    template <class... Keys>
    static RngStream derive(std::uint64_t seed, Keys... keys) {
        RngStream s(seed);
        ((s = s.split(static_cast<std::uint64_t>(keys))), ...);
        return s;
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Uses rejection to stay unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (one value per call).
    double normal();

    std::uint64_t key() const noexcept { return key_; }

private:
    RngStream(std::uint64_t parent, std::uint64_t index)
        : key_(splitmix64(parent ^ splitmix64(index + 0x632BE59BD9B4E019ull))), engine_(key_) {}

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

inline double RngStream::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace dsac
