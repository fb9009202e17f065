#ifndef SEQCURVE_RNG_HPP
#define SEQCURVE_RNG_HPP

#include <cstdint>
#include <array>

#include "normal.hpp"

namespace seqcurve {

// Philox4x32-10 counter-based generator.  Each (seed, stream) pair is an
// independent stream addressed by a 128-bit counter, so draws can be produced
// in any order by any number of workers and still be bit-identical.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
               static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
          ctr_{0, 0, 0, 0}, buf_pos_(4) {}

    std::uint32_t next_u32() {
        if (buf_pos_ == 4) {
            buf_ = block(ctr_, key_);
            advance_counter();
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0,1): 53-bit mantissa, offset to exclude the endpoints.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double next_normal() { return norm_quantile(next_uniform()); }

private:
    using Key = std::array<std::uint32_t, 4>;   // key0/key1 plus 64-bit stream id
    using Ctr = std::array<std::uint32_t, 4>;

    static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
    }
    static std::uint32_t mullo(std::uint32_t a, std::uint32_t b) { return a * b; }

    static Ctr block(Ctr c, const Key& k) {
        std::uint32_t k0 = k[0] ^ k[2];   // fold the stream id into the key
        std::uint32_t k1 = k[1] ^ k[3];
        for (int round = 0; round < 10; ++round) {
            const std::uint32_t lo0 = mullo(0xD2511F53u, c[0]);
            const std::uint32_t hi0 = mulhi(0xD2511F53u, c[0]);
            const std::uint32_t lo1 = mullo(0xCD9E8D57u, c[2]);
            const std::uint32_t hi1 = mulhi(0xCD9E8D57u, c[2]);
            const Ctr next = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
            c = next;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return c;
    }

    void advance_counter() {
        for (int i = 0; i < 4; ++i)
            if (++ctr_[i] != 0) break;
    }

    Key key_;
    Ctr ctr_;
    Ctr buf_{};
    int buf_pos_;
};

} // namespace seqcurve

#endif
