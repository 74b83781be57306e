// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams.
//
// Every chain owns a RandomStream keyed by (master seed, stream id). The
// underlying generator is Philox4x32-10: the 64-bit seed is the Philox key,
// the stream id fills the upper half of the 128-bit counter and the lower
// half counts blocks. Two streams with different ids never share a counter
// value, so they are independent by construction and a run is reproducible
// bit for bit from (seed, stream id) alone.
//
// Normal variates come from Boost.Random's ziggurat normal_distribution fed by
// the 64-bit outputs of the stream. It keeps no state between calls, so the
// k-th normal depends only on the stream position. Outputs are bit-stable for
// a fixed Boost version.

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/random/normal_distribution.hpp>

namespace proxsampler {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter block(Counter ctr, Key key)
    {
        std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * c0;
            const std::uint64_t p1 = std::uint64_t{kMul1} * c2;
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            c0 = hi1 ^ c1 ^ k0;
            c2 = hi0 ^ c3 ^ k1;
            c1 = static_cast<std::uint32_t>(p1);
            c3 = static_cast<std::uint32_t>(p0);
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return {c0, c1, c2, c3};
    }
};

class RandomStream
{
  public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id)
    {
        key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t blocks_consumed() const { return block_index_; }

    std::uint32_t next_u32()
    {
        if (pos_ == 4) {
            refill();
        }
        return buffer_[pos_++];
    }

    /// Two consecutive words (low first). A block with a single word left is
    /// discarded so 64-bit draws always come from one block.
    result_type operator()()
    {
        if (pos_ > 2) {
            refill();
        }
        const std::uint64_t lo = buffer_[pos_];
        const std::uint64_t hi = buffer_[pos_ + 1];
        pos_ += 2;
        return (hi << 32) | lo;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_positive() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal.
    double gaussian() { return boost::random::normal_distribution<double>{}(*this); }

    /// Derives an independent child stream. The child's key mixes this
    /// stream's (seed, id) so children of different parents do not collide.
    RandomStream split(std::uint64_t child_id) const
    {
        const std::uint64_t child_seed =
            detail::splitmix64(seed_ ^ detail::splitmix64(stream_id_ + 0x632be59bd9b4e019ull));
        return RandomStream(child_seed, child_id);
    }

  private:
    void refill()
    {
        const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(block_index_),
                                         static_cast<std::uint32_t>(block_index_ >> 32),
                                         static_cast<std::uint32_t>(stream_id_),
                                         static_cast<std::uint32_t>(stream_id_ >> 32)};
        buffer_ = Philox4x32::block(ctr, key_);
        ++block_index_;
        pos_ = 0;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    Philox4x32::Key key_{};
    std::uint64_t block_index_ = 0;
    Philox4x32::Counter buffer_{};
    int pos_ = 4;
};

}  // namespace proxsampler
