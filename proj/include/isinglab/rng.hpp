#pragma once
// Counter-based random number generator (Philox4x32-10) with cheap stream
// derivation: every (seed, stream) pair yields an independent sequence, so
// replicas can run in parallel without shared state and results do not depend
// on scheduling. Known-answer vectors are pinned in the tests.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ilab {

class Rng {
public:
    Rng() : Rng(0, 0) {}
    Rng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    // Stream ids are composed from a replica index and a small purpose tag so
    // that e.g. the killing mark never shares randomness with the trajectory.
    enum Purpose : uint64_t {
        kDynamics = 0,
        kKilling = 1,
        kInit = 2,
        kMilestone = 3,
        kScratch = 4,
    };
    static Rng for_replica(uint64_t seed, uint64_t replica, Purpose p) {
        return Rng(seed, (replica << 3) | static_cast<uint64_t>(p));
    }

    uint32_t next_u32() {
        if (idx_ == 4) refill();
        return out_[idx_++];
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0,1): never returns 0, safe under log().
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Inverse-CDF exponential with the given mean.
    double exponential(double mean) { return -mean * std::log(uniform()); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n == 0");
        // rejection to avoid modulo bias
        uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do { v = next_u64(); } while (v >= lim);
        return v % n;
    }

    double normal() {
        // Box-Muller, one value per call (the sibling is discarded to keep the
        // consumed-counter accounting simple).
        double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Raw block access, used by the known-answer tests.
    static void philox_block(const uint32_t ctr_in[4], const uint32_t key_in[2],
                             uint32_t out[4]) {
        uint32_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
        uint32_t k0 = key_in[0], k1 = key_in[1];
        for (int round = 0; round < 10; ++round) {
            uint64_t p0 = 0xD2511F53ull * c0;
            uint64_t p1 = 0xCD9E8D57ull * c2;
            uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
            uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
            uint32_t n0 = hi1 ^ c1 ^ k0;
            uint32_t n1 = lo1;
            uint32_t n2 = hi0 ^ c3 ^ k1;
            uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
    }

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    void refill() {
        uint32_t ctr[4] = {
            static_cast<uint32_t>(block_), static_cast<uint32_t>(block_ >> 32),
            static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
        uint32_t key[2] = {static_cast<uint32_t>(seed_),
                           static_cast<uint32_t>(seed_ >> 32)};
        philox_block(ctr, key, out_);
        ++block_;
        idx_ = 0;
    }

    uint64_t seed_ = 0;
    uint64_t stream_ = 0;
    uint64_t block_ = 0;
    uint32_t out_[4] = {0, 0, 0, 0};
    int idx_ = 4;
};

} // namespace ilab
