#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace trendlab {

// Deterministic random source. mt19937_64's output sequence is pinned by the
// standard, but the std distribution adaptors are not — identical seeds must
// produce byte-identical artifacts across standard libraries, so the
// distributions here are hand-rolled on top of the raw engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    // Standard normal via Box-Muller. Two engine draws per call, no caching,
    // so the stream position is a pure function of the call count.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Uniform integer in [0, n), n > 0. Multiply-shift reduction.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace trendlab
