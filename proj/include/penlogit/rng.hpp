#pragma once

// Counter-based random number generation. Every stream is a pure function
// of (seed, stream id, counter), so parallel schedules cannot change the
// draws a given task sees: replicate r or bootstrap resample b always reads
// stream r/b regardless of which thread runs it.

#include <cstdint>
#include <cmath>

namespace penlogit {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(detail::mix64(seed ^ detail::mix64(stream + 0x632be59bd9b4e019ULL))) {}

    // Child generator for an independent substream (replicate, resample, ...).
    CounterRng substream(std::uint64_t stream) const {
        return CounterRng(key_, stream + 1);
    }

    std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    // Uniform on (0, 1): 53-bit mantissa shifted off zero so logs are safe.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n) by 128-bit multiply-shift; the O(n/2^64)
    // modulo bias is far below anything observable at our sample sizes.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace penlogit
