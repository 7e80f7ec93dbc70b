#pragma once

// Deterministic random streams.
//
// Every stochastic component in the pipeline owns an RngStream identified by
// (seed, stream_id). Draws come from SplitMix64 evaluated at
// mix(seed, stream_id) + counter * golden-gamma, so a stream is a pure function
// of its identity and the draw index: no global state, no platform-dependent
// distributions, reproducible across reruns and worker counts.
//
// Gaussians use the Marsaglia polar form of Box-Muller (frozen choice). It only
// needs sqrt and log from libm, and its rejection loop consumes uniforms from
// the owning stream, so sequences stay deterministic per stream.

#include <cmath>
#include <cstdint>
#include <vector>

namespace vardiv {

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t mix2(uint64_t a, uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0xD6E8FEB86659FD93ULL * splitmix64(b ^ 0x2545F4914F6CDD1DULL)));
}

} // namespace detail

// Fold an arbitrary list of 64-bit tags into one stream id.
inline uint64_t derive_stream(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (uint64_t p : parts) {
        h = detail::mix2(h, p);
    }
    return h;
}

struct RngStream {
    uint64_t seed      = 0;
    uint64_t stream_id = 0;
    uint64_t counter   = 0;

    RngStream() : RngStream(0, 0) {}
    RngStream(uint64_t seed_, uint64_t stream_id_)
        : seed(seed_), stream_id(stream_id_), base_(detail::mix2(seed_, stream_id_)) {}

    uint64_t next_u64() {
        ++counter;
        return detail::splitmix64(base_ + counter * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal, Marsaglia polar method with one cached value.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_      = v * scale;
        have_spare_ = true;
        return u * scale;
    }

    // Independent child stream; children with distinct tags never overlap.
    RngStream fork(uint64_t tag) const {
        return RngStream(seed, detail::mix2(stream_id, detail::splitmix64(tag ^ 0xA5A5A5A5A5A5A5A5ULL)));
    }

private:
    uint64_t base_       = 0;
    double   spare_      = 0.0;
    bool     have_spare_ = false;
};

// Fill a flat buffer of n standard normals.
inline std::vector<double> gaussian(size_t n, RngStream& rng) {
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        out[i] = rng.next_gaussian();
    }
    return out;
}

} // namespace vardiv
