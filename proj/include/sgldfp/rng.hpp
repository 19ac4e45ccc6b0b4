#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace sgldfp {

/// Counter-based pseudo-random stream (SplitMix64 core).
///
/// Each stream is identified by (master_seed, stream_id, substream) and is
/// independent of every other stream by construction, so replicas can be run
/// in any order, on any number of workers, and still reproduce bit-identical
/// results. Streams must not be shared across workers.
class RngStream {
public:
    explicit RngStream(std::uint64_t state) : state_(state) {}

    static RngStream derive(std::uint64_t master_seed, std::uint64_t stream_id,
                            std::uint64_t substream = 0) {
        std::uint64_t s = mix64(master_seed + 0x9e3779b97f4a7c15ull * (stream_id + 1));
        s = mix64(s ^ (0xbf58476d1ce4e5b9ull * (substream + 1)));
        return RngStream(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform draw in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n).
    int uniform_index(int n) {
        return static_cast<int>(
            (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    /// Standard normal draw via Box-Muller. Consumes exactly two uniforms,
    /// keeping stream positions aligned no matter how draws interleave.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Eigen::VectorXd normal_vector(int d) {
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z(i) = normal();
        return z;
    }

private:
    static std::uint64_t mix64(std::uint64_t x) {
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdull;
        x ^= x >> 33;
        x *= 0xc4ceb9fe1a85ec53ull;
        x ^= x >> 33;
        return x;
    }

    std::uint64_t state_;
};

}  // namespace sgldfp
