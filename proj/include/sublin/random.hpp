#pragma once

#include <cstdint>

namespace sublin {

// Reproducible random stream: xoshiro256++ whose state is derived from a
// (master seed, stream id) pair.  The derivation is fixed forever: the four
// state words are the first four outputs of a splitmix64 generator seeded
// with  master ^ (stream_id * 0x9E3779B97F4A7C15).  Two streams with
// different ids are statistically independent for our purposes; the same
// pair always yields the same draw sequence.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::uint64_t sm = master_seed ^ (stream_id * 0x9E3779B97F4A7C15ULL);
        for (auto& word : state_) word = splitmix64(sm);
        // all-zero state is invalid for xoshiro; splitmix64 makes it
        // unreachable in practice but guard anyway
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on [0, 1), 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1], safe as a log() argument
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& s) {
        std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

// Stream-id composition used across the library: repetition r of a given
// experiment uses stream 2r for draws and 2r+1 for policy decisions, offset
// by a 40-bit configuration tag when several configurations share one master
// seed.
inline std::uint64_t stream_id(std::uint64_t config_tag, std::uint64_t repetition,
                               bool policy_stream) {
    return (config_tag << 40) | (repetition << 1) | (policy_stream ? 1u : 0u);
}

} // namespace sublin
