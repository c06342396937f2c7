#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hydroflux {

/// Deterministic, splittable random stream.
///
/// A stream is identified by a 64-bit key. Child streams are derived from the
/// parent key plus a label (string or integer), so that every consumer draws
/// from its own sequence regardless of the order in which other consumers
/// run. There is no global generator anywhere in the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed)), engine_(key_) {}

    Rng split(std::string_view label) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (unsigned char ch : label) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return Rng(key_ ^ mix(h), tag{});
    }

    Rng split(std::uint64_t index) const { return Rng(mix(key_ + mix(index + 0x632be59bd9b4e019ULL)), tag{}); }

    std::uint64_t key() const noexcept { return key_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

    /// splitmix64 finalizer.
    static std::uint64_t mix(std::uint64_t x) noexcept {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    struct tag {};
    Rng(std::uint64_t key, tag) : key_(key), engine_(key_) {}

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

}  // namespace hydroflux
